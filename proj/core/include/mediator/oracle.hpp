#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/estimands.hpp"
#include "mediator/policy.hpp"

namespace mediator {

struct NoiseSpec {
  enum class Dist { kNormal, kUniform, kBernoulli };
  Dist dist = Dist::kNormal;
  double a = 0.0;  // mean / lo / p
  double b = 1.0;  // sd / hi / unused
};

enum class VarRole { kW, kA, kZ, kM, kY };

/// Expression tree over previously defined variables and the equation's own
/// exogenous noise. Supported nodes: constants, variable references, noise,
/// add, sub, mul, sigmoid, step (1{x >= 0}), min, max.
struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
  enum class Kind { kConst, kVar, kNoise, kAdd, kSub, kMul, kSigmoid, kStep, kMin, kMax };
  Kind kind = Kind::kConst;
  double value = 0.0;
  std::string name;
  int slot = -1;  // resolved variable slot, filled by Scm::compile
  std::vector<ExprPtr> args;
};

ExprPtr e_const(double v);
ExprPtr e_var(std::string name);
ExprPtr e_noise();
ExprPtr e_add(std::vector<ExprPtr> args);
ExprPtr e_sub(ExprPtr a, ExprPtr b);
ExprPtr e_mul(std::vector<ExprPtr> args);
ExprPtr e_sigmoid(ExprPtr a);
ExprPtr e_step(ExprPtr a);
ExprPtr e_min(ExprPtr a, ExprPtr b);
ExprPtr e_max(ExprPtr a, ExprPtr b);

/// intercept + sum(coef * var)
ExprPtr e_lin(double intercept, std::vector<std::pair<double, std::string>> terms,
              bool plus_noise = true);

struct Equation {
  std::string name;
  VarRole role = VarRole::kW;
  NoiseSpec noise;
  ExprPtr expr;
};

/// A structural causal model in the order W, A, Z, M, Y (Z optional, W/Z/M
/// may hold several equations). Each equation may reference previously
/// defined variables and its own noise.
struct Scm {
  std::vector<Equation> equations;
  std::uint64_t seed = 0;

  /// Checks block ordering and reference validity; resolves variable slots.
  void compile();

  std::vector<std::size_t> block(VarRole role) const;
  VariableRoles roles() const;
  bool has_z() const { return !block(VarRole::kZ).empty(); }
};

Scm scm_from_json_text(const std::string& text);
std::string scm_to_json_text(const Scm& scm);
Scm load_scm(const std::string& path);
void save_scm(const Scm& scm, const std::string& path);

/// n i.i.d. rows drawn by evaluating the equations in causal order.
MediationDataset simulate(const Scm& scm, std::size_t n, std::uint64_t seed);

struct TruthValue {
  double value = 0.0;
  double mc_se = 0.0;
};

struct TruthTable {
  std::map<std::string, TruthValue> entries;
  std::size_t draws = 0;

  const TruthValue& at(const std::string& name) const;
};

/// Counterfactual mean of a functional's twin representation. Coupled
/// quantities reuse the unit's own exogenous draws across branches (so
/// cross-world values are computable); randomized draws use fresh noise for
/// the substituted branch.
TruthValue truth_counterfactual(const Scm& scm, const FunctionalSpec& spec, std::size_t draws,
                                std::uint64_t seed);

/// Counterfactual mean of a named twin quantity: S0..S4, S1p, S2p, S2pp,
/// S3pp, G11, G10, G00.
TruthValue truth_counterfactual_twin(const Scm& scm, const std::string& twin,
                                     const PolicyPair& policies, std::size_t draws,
                                     std::uint64_t seed);

/// The statistical functional evaluated by nested Monte Carlo from the
/// SCM's implied conditional laws (every conditional draw uses fresh noise).
/// Matches truth_counterfactual when the SCM's exogenous noises are
/// independent, which is the identification check the tests exercise.
TruthValue truth_statistical(const Scm& scm, const FunctionalSpec& spec, std::size_t draws,
                             std::uint64_t seed);

/// True values of every effect in a family's contrast table (plus the ATE
/// and the functional means it references), computed from shared per-draw
/// noise bundles so contrasts telescope exactly.
TruthTable truth_table(const Scm& scm, EffectFamilyCode family, const PolicyPair& policies,
                       std::size_t draws, std::uint64_t seed);

}  // namespace mediator
