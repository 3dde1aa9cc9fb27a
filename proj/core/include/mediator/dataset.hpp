#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mediator {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Column roles of a mediation dataset: covariates W, treatment A,
/// mediator-outcome confounders Z (may be empty), mediators M, outcome Y.
struct VariableRoles {
  std::vector<std::string> covariates;  // W
  std::string treatment;                // A
  std::vector<std::string> moc;         // Z
  std::vector<std::string> mediators;   // M
  std::string outcome;                  // Y
  std::string id;                       // optional

  bool has_moc() const { return !moc.empty(); }

  /// Throws RoleConflictError unless the five role sets are pairwise
  /// disjoint and mediators is non-empty.
  void validate() const;
};

/// Immutable numeric table with roles attached. Row order is preserved
/// from the source file; no missing values are tolerated.
struct MediationDataset {
  std::vector<std::string> columns;
  Mat values;  // n x columns.size()
  VariableRoles roles;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }

  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws MissingColumnError
  Vec column(const std::string& name) const;
};

enum class ZpiStrategy {
  kTreatmentStratum,       // permute Z uniformly within each treatment level
  kMatchedWithinCovariates // swap Z between nearest-covariate pairs within each treatment level
};

/// MediationDataset plus the permuted Z copy and cross-fitting fold labels.
struct AugmentedDataset {
  MediationDataset base;
  Mat zpi;                     // n x moc.size(); empty when moc is empty
  std::vector<int> fold;       // 1..folds per row; empty until make_folds
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t n() const { return base.n(); }
};

/// Reads a strict CSV: UTF-8, comma separated, one header row, plain decimal
/// numerics, no quoting. Every role column must be present and fully numeric.
MediationDataset load_csv(const std::string& path, const VariableRoles& roles);

/// Builds a MediationDataset from in-memory columns (used by the simulator
/// and by tests).
MediationDataset make_dataset(std::vector<std::string> columns, Mat values, VariableRoles roles);

/// Attaches the within-stratum permuted copy of the Z columns. With empty
/// moc the data passes through with an empty zpi block. Strata with fewer
/// than two rows keep their Z values and produce a warning.
AugmentedDataset augment_zpi(const MediationDataset& data, std::uint64_t seed,
                             ZpiStrategy strategy = ZpiStrategy::kTreatmentStratum);

/// Assigns fold labels 1..v. v = 1 puts every row in one fold; v > 1 deals
/// near-equal folds, stratified on the outcome when it is binary.
AugmentedDataset make_folds(AugmentedDataset data, int v, std::uint64_t seed);

/// Summary of estimated weight magnitudes against the clipping bound.
struct PositivityDiagnostics {
  double min = 0.0;
  double max = 0.0;
  double q01 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q99 = 0.0;
  double clip_bound = 0.0;
  std::size_t n_clipped = 0;
  double frac_clipped = 0.0;
  bool flagged = false;  // raised when more than 1% of weights sit at the bound
};

PositivityDiagnostics positivity_diagnostics(const std::vector<double>& weights, double clip_bound);

}  // namespace mediator
