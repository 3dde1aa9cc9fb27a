#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/estimands.hpp"
#include "mediator/learners.hpp"
#include "mediator/riesz.hpp"

namespace mediator {

struct EngineConfig {
  std::vector<LearnerSpec> learners;
  int learner_cv_folds = 5;
  Stacking stacking = Stacking::kConvex;
  RieszFunctionClass riesz;
  std::uint64_t seed = 0;
};

/// Per-step held-out evaluations and fit metadata.
struct StepArtifacts {
  Vec nu_obs;      // nu_k at the observed row
  Vec nu_shifted;  // nu_k under the step's consume shift
  Vec alpha_obs;   // alpha_k at the observed row
  std::vector<int> learner_selected;                 // per fold
  std::vector<std::vector<double>> learner_weights;  // per fold
  std::vector<double> riesz_loss;                    // per fold, final
  std::vector<std::vector<double>> riesz_trace;      // per fold
  std::size_t alpha_clipped = 0;
};

/// Everything run_program produces: held-out evaluations for every step,
/// the outcome column, and the plug-in value. Rows are never evaluated by
/// models trained on them when more than one fold is configured.
///
/// Policies that depend on the natural treatment (natural, threshold_shift)
/// are handled by expanding the functional over the distinct per-row shift
/// patterns; each pattern cell runs a constant-shift chain whose outermost
/// representer weight is the cell indicator, and the cells' influence terms
/// add up. `corrections` and `terminal` hold the combined per-row pieces;
/// for plain constant policies they coincide with the single chain and the
/// per-step arrays in `steps`.
struct FitArtifacts {
  std::vector<StepArtifacts> steps;  // summed alpha over cells; nu arrays from the last cell
  std::vector<Vec> corrections;      // per step: sum_c alpha_k^c (nu_{k-1}^c o S_k - nu_k^c)
  Vec terminal;                      // sum_c 1_c nu_K^c o S_theta
  Vec outcome;
  std::vector<int> fold;
  double plugin = 0.0;
  std::size_t cells = 1;
};

/// Shares step regressions across functionals with identical program
/// prefixes and representers across functionals with identical suffixes.
class StepCache {
 public:
  std::map<std::string, StepArtifacts> nu;
  std::map<std::string, StepArtifacts> alpha;
};

/// Cross-fitted sequential regressions (innermost first) followed by the
/// recursive representer fits (outermost first); all per-row values are
/// out-of-fold when folds > 1.
FitArtifacts run_program(const RegressionProgram& program, const AugmentedDataset& data,
                         const EngineConfig& config, StepCache* cache = nullptr);

/// Uncentered per-row influence terms
///   psi_i = alpha_1 (Y - nu_1) + sum_k alpha_k (nu_{k-1} o S_k - nu_k) + nu_K o S_theta.
Vec eif_terms(const FitArtifacts& artifacts);

/// The estimating-equation form: eif_terms - theta.
Vec assemble_eif(const FitArtifacts& artifacts, double theta);

struct EffectEstimate {
  std::string name;
  double plugin = 0.0;
  double onestep = 0.0;
  Vec eif;  // centered at the one-step value
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::vector<std::string> warnings;
};

/// One-step correction: the estimate is the mean of the uncentered
/// influence terms; SE = sd(eif)/sqrt(n); 95% CI uses 1.96.
EffectEstimate onestep(double plugin, const Vec& psi_uncentered);

/// Linear contrast of named estimates; the contrast EIF is the signed sum
/// of the component EIF vectors.
EffectEstimate contrast(const std::string& name,
                        const std::vector<std::pair<const EffectEstimate*, int>>& parts);

struct FalsificationResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::string conclusion;
};

/// Wald test of H0: R = 0. Rejection is evidence of intermediate
/// confounding; failing to reject supports no conclusion.
FalsificationResult falsification_test(const EffectEstimate& remainder, double alpha = 0.05);

/// All estimates for one contrast table on one dataset.
struct FamilyEstimate {
  EffectFamilyCode family;
  std::map<std::string, EffectEstimate> functionals;  // keyed by FunctionalSpec::key()
  std::vector<EffectEstimate> effects;                // contrast-table order
  std::optional<FalsificationResult> falsification;
  PositivityDiagnostics positivity;
  std::vector<std::string> warnings;
  std::map<std::string, std::vector<double>> riesz_losses;  // per functional key: per step/fold
  std::map<std::string, std::vector<std::string>> learner_picks;
  std::vector<std::size_t> fold_sizes;
  std::size_t alpha_clipped_total = 0;
};

FamilyEstimate estimate_family(const ContrastTable& table, const AugmentedDataset& data,
                               const EngineConfig& config);

/// Normal tail helper shared with tests.
double normal_two_sided_p(double z);

}  // namespace mediator
