#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"

namespace mediator {

enum class LearnerKind { kMean, kLinear, kRidge, kLogistic, kKnn, kBoostedStumps };

enum class TargetType { kContinuous, kBinary };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kMean;
  double ridge_lambda = 1.0;   // ridge
  int knn_k = 10;              // knn
  int boost_trees = 100;       // boosted stumps
  int boost_depth = 2;         // 1 or 2
  double boost_rate = 0.1;

  static LearnerSpec from_name(const std::string& name);  // "mean", "linear", ...
  std::string name() const;
  void validate(TargetType target) const;
};

enum class Stacking { kDiscrete, kConvex };

struct EnsembleSpec {
  std::vector<LearnerSpec> candidates;
  int cv_folds = 5;
  Stacking stacking = Stacking::kConvex;
  TargetType target = TargetType::kContinuous;
};

/// A fitted regression model; predictions are pure functions of the input.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Vec predict(const Mat& x) const = 0;
  virtual std::size_t arity() const = 0;
};

/// Result of fitting an EnsembleSpec: the refit candidates plus their
/// cross-validated risks and the stacking weights.
struct FittedRegressor {
  std::vector<std::shared_ptr<const FittedModel>> models;
  std::vector<double> cv_risk;      // per candidate
  std::vector<double> weights;      // convex weights (one-hot for discrete stacking)
  TargetType target = TargetType::kContinuous;
  int selected = 0;                 // argmin-risk candidate
  bool degenerate_target = false;   // constant y collapsed to the mean learner
  std::string warning;

  Vec predict(const Mat& x) const;
  std::size_t arity() const;
};

/// Fits every candidate with cross-validated risk (MSE for continuous
/// targets, negative log-likelihood for binary ones) and combines them by
/// discrete selection or convex stacking. Ties break toward the earlier
/// candidate. A constant target collapses to the mean learner.
FittedRegressor fit_ensemble(const EnsembleSpec& spec, const Mat& x, const Vec& y,
                             std::uint64_t seed);

/// Fits a single learner on (x, y).
std::shared_ptr<const FittedModel> fit_learner(const LearnerSpec& spec, TargetType target,
                                               const Mat& x, const Vec& y, std::uint64_t seed);

/// Prediction clamp for binary targets.
inline constexpr double kProbEps = 1e-6;

}  // namespace mediator
