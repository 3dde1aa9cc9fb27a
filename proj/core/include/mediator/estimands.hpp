#pragma once

#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/policy.hpp"
#include "mediator/shift.hpp"

namespace mediator {

enum class FunctionalKind { kNatural2, kCoupled3, kRandomized4 };

/// One mediation statistical functional, identified by its kind and the
/// policy index attached to each slot. Indexes select d0 or d1 from the
/// policy pair.
struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::kNatural2;
  std::vector<int> a;  // 2, 3 or 4 indices in {0, 1}
  PolicyPair policies;

  std::string key() const;

  bool operator==(const FunctionalSpec& o) const { return key() == o.key(); }
};

/// One sequential-regression step: regress the current pseudo-outcome on
/// `features`; `consume_shift` is applied to the fitted function's inputs
/// when it is used downstream (to form the next step's pseudo-outcome, or
/// the terminal average for the last step).
struct ProgramStep {
  std::vector<std::string> features;
  ShiftMap consume_shift;
};

/// Ordered regression plan computing one functional: step 1 regresses Y,
/// each later step regresses the previous fit evaluated under the previous
/// step's consume shift, and the terminal value averages the last fit under
/// its consume shift.
struct RegressionProgram {
  std::vector<ProgramStep> steps;
  std::string key;

  std::size_t depth() const { return steps.size(); }
  const ShiftMap& pseudo_shift(std::size_t k) const;  // shift forming step k's target, k >= 2
  const ShiftMap& terminal_shift() const { return steps.back().consume_shift; }

  void validate(const VariableRoles& roles) const;
};

/// E[ E{ E(Y | A, M, W) at d_{a1} | A, W } at d_{a2} ]; requires empty moc.
RegressionProgram program_natural2(int a1, int a2, const PolicyPair& policies,
                                   const VariableRoles& roles);

/// Coupled-Z functional: Y-regression, Z-coupled mediator integral, outer
/// Z and W integrals share one Z draw; requires non-empty moc.
RegressionProgram program_coupled3(int a1, int a2, int a3, const PolicyPair& policies,
                                   const VariableRoles& roles);

/// Randomized-draw functional using the permuted Z copy for the inner
/// integral; requires non-empty moc and an augmented dataset.
RegressionProgram program_randomized4(int a1, int a2, int a3, int a4, const PolicyPair& policies,
                                      const VariableRoles& roles);

/// Builds the program for any FunctionalSpec.
RegressionProgram build_program(const FunctionalSpec& spec, const VariableRoles& roles);

enum class EffectFamilyCode { kNatural, kRandomizedInterventional, kRecantingTwin };

EffectFamilyCode effect_family_from_string(const std::string& code);  // "N", "RI", "RT"
std::string effect_family_to_string(EffectFamilyCode code);

/// A named effect expressed as a +/-1 combination of functionals.
struct ContrastDef {
  std::string name;
  std::vector<std::pair<FunctionalSpec, int>> terms;  // (functional, +1/-1)
};

struct ContrastTable {
  EffectFamilyCode family;
  std::vector<ContrastDef> effects;
  bool has_remainder = false;      // RT: R row present
  bool has_decomposition = false;  // N and RT decompose the ATE; RI does not

  /// The distinct functionals referenced by the table.
  std::vector<FunctionalSpec> functionals() const;
};

/// Maps an effect family to its contrast table. N requires empty moc
/// (FamilyRoleMismatchError otherwise); RI/RT with empty moc degenerate to
/// their natural-functional equivalents.
ContrastTable effects_to_contrasts(EffectFamilyCode family, const PolicyPair& policies,
                                   const VariableRoles& roles);

}  // namespace mediator
