#pragma once

#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/shift.hpp"

namespace mediator {

/// Resolves a list of column names against an augmented dataset and
/// materializes feature rows, optionally under a ShiftMap. Shifting maps the
/// treatment column through a policy of the natural treatment and covariates
/// and/or reads Z columns from the permuted copy; all other columns are
/// passed through untouched.
class FeatureExtractor {
 public:
  FeatureExtractor(const AugmentedDataset& data, std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t arity() const { return names_.size(); }

  /// Features of all rows under `shift`.
  Mat extract(const ShiftMap& shift) const;

  /// Features of the given rows under `shift`.
  Mat extract(const std::vector<std::size_t>& rows, const ShiftMap& shift) const;

  /// Single row.
  Vec row(std::size_t i, const ShiftMap& shift) const;

 private:
  const AugmentedDataset* data_;
  std::vector<std::string> names_;
  std::vector<Eigen::Index> base_index_;
  std::vector<int> zpi_index_;    // >= 0 when the column is a Z column
  std::vector<bool> is_treatment_;

  double value(std::size_t i, std::size_t j, const ShiftMap& shift) const;
};

/// The treatment column mapped through a policy row by row.
Vec shifted_treatment(const AugmentedDataset& data, const Policy& policy);

}  // namespace mediator
