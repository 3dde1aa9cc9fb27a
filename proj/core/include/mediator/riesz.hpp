#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/estimands.hpp"
#include "mediator/features.hpp"
#include "mediator/shift.hpp"

namespace mediator {

/// A weight function evaluated on a step's raw feature vector.
using RowFn = std::function<double(const Vec&)>;

/// Empirical Riesz loss
///   L_n(alpha) = (1/n) sum_i [ alpha(x_i)^2 - 2 w_i alpha(s_i) ]
/// where s_i is the shifted version of row i. Minimizing it over a function
/// class projects the representer of the weighted shift functional onto the
/// class without ever forming a density ratio.
double riesz_loss(const RowFn& alpha, const Mat& x_obs, const Mat& x_shifted, const Vec& weights);

/// Linear-basis function class: polynomial features per column with optional
/// treatment-indicator interactions, or one indicator per observed cell
/// (saturated). Ridge penalty lambda stabilizes the Gram solve.
struct RieszBasisSpec {
  int degree = 2;
  bool interact_treatment = true;
  bool saturated = false;
  double lambda = 1e-3;
  double clip = 50.0;
};

struct FeedforwardSpec {
  int hidden = 32;
  int epochs = 20;
  double lr = 1e-2;
  int batch = 64;
};

enum class RieszKind { kLinearBasis, kFeedforward };

struct RieszFunctionClass {
  RieszKind kind = RieszKind::kLinearBasis;
  RieszBasisSpec basis;
  FeedforwardSpec feedforward;
  double clip = 50.0;
};

/// Feature map used by the linear class; exposed for tests.
class LinearBasis {
 public:
  LinearBasis();
  ~LinearBasis();
  LinearBasis(const LinearBasis&);
  LinearBasis& operator=(const LinearBasis&);
  LinearBasis(LinearBasis&&) noexcept;
  LinearBasis& operator=(LinearBasis&&) noexcept;

  static LinearBasis build(const RieszBasisSpec& spec, const Mat& x_train, int treatment_col);

  Vec features(const Vec& x) const;
  Mat features(const Mat& x) const;
  std::size_t dim() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// A fitted representer: evaluate clips to [-clip_bound, clip_bound].
struct RieszFit {
  RowFn evaluator;
  double clip_bound = 50.0;
  double final_loss = 0.0;
  double initial_loss = 0.0;            // feedforward: loss before training
  std::vector<double> loss_trace;       // one entry per epoch (single entry for linear)
  Vec coefficients;                     // linear class only
  double normal_eq_residual = 0.0;      // linear class only

  double eval(const Vec& features) const;
  Vec eval(const Mat& x) const;
};

/// Exact ridge solve of the Riesz loss over the linear basis:
/// c = (G + lambda I)^{-1} b, G = phi'phi/n, b = phi_shift' w / n.
/// Throws SingularGramError when the penalized Gram has condition number
/// above 1e12.
RieszFit fit_riesz_linear(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                          const RieszBasisSpec& spec, int treatment_col);

/// Mini-batch first-order minimization of the same loss over a one-hidden-
/// layer softplus network with zero-initialized output layer. Returns the
/// parameters with the lowest epoch-end loss; throws DivergedLossError when
/// the epoch-end loss exceeds 1e6.
RieszFit fit_riesz_ff(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                      const FeedforwardSpec& spec, double clip, std::uint64_t seed);

/// Dispatch on the configured class.
RieszFit fit_riesz_step(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                        const RieszFunctionClass& cls, int treatment_col, std::uint64_t seed);

/// Fits the chain of representers for a program, outermost step first: the
/// outermost uses unit outer weights and the terminal shift; each inner fit
/// uses the previous fit's evaluations as outer weights and its own step's
/// consume shift. Element 0 of the result belongs to the last program step.
std::vector<RieszFit> recursive_riesz(const RegressionProgram& program, const AugmentedDataset& data,
                                      const RieszFunctionClass& cls, std::uint64_t seed);

}  // namespace mediator
