#include "mediator/estimands.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mediator/errors.hpp"

namespace mediator {

namespace {

std::vector<std::string> step_features(const VariableRoles& roles, bool with_z, bool with_m) {
  std::vector<std::string> f;
  f.push_back(roles.treatment);
  if (with_z)
    for (const auto& c : roles.moc) f.push_back(c);
  if (with_m)
    for (const auto& c : roles.mediators) f.push_back(c);
  for (const auto& c : roles.covariates) f.push_back(c);
  return f;
}

ShiftMap treat_shift(const PolicyPair& policies, int index, bool swap_z = false) {
  ShiftMap s;
  s.set_treatment = policies.at(index);
  s.swap_z = swap_z;
  return s;
}

std::string program_key(const std::string& name, const std::vector<int>& a,
                        const PolicyPair& policies) {
  std::ostringstream k;
  k << name << "(";
  for (std::size_t i = 0; i < a.size(); ++i) k << (i ? "," : "") << a[i];
  k << ")|d0=" << policies.d0.key() << "|d1=" << policies.d1.key();
  return k.str();
}

void check_index(int a) {
  if (a != 0 && a != 1) throw ValidationError("policy index must be 0 or 1");
}

}  // namespace

std::string FunctionalSpec::key() const {
  const char* name = kind == FunctionalKind::kNatural2    ? "nat2"
                     : kind == FunctionalKind::kCoupled3  ? "cpl3"
                                                          : "rnd4";
  return program_key(name, a, policies);
}

const ShiftMap& RegressionProgram::pseudo_shift(std::size_t k) const {
  if (k < 2 || k > steps.size())
    throw ValidationError("pseudo_shift index out of range");
  return steps[k - 2].consume_shift;
}

void RegressionProgram::validate(const VariableRoles& roles) const {
  if (steps.empty()) return;  // degenerate "average Y" program
  // Step 1 conditions on everything present; later sets draw from step 1,
  // keep the treatment and every covariate, and never grow on the way down
  // to the final (A, W) regression.
  const std::set<std::string> full(steps.front().features.begin(), steps.front().features.end());
  for (const auto& name : step_features(roles, roles.has_moc(), true))
    if (!full.count(name)) throw ValidationError("program step 1 must condition on " + name);
  std::size_t prev_size = full.size();
  for (std::size_t k = 1; k < steps.size(); ++k) {
    const std::set<std::string> cur(steps[k].features.begin(), steps[k].features.end());
    if (cur.size() > prev_size)
      throw ValidationError("program conditioning sets must not grow");
    for (const auto& name : cur)
      if (!full.count(name))
        throw ValidationError("conditioning sets must stay within step 1's; unexpected " + name);
    if (!cur.count(roles.treatment))
      throw ValidationError("every step must condition on the treatment");
    prev_size = cur.size();
  }
  if (steps.back().features.size() != roles.covariates.size() + 1)
    throw ValidationError("the last step must condition on exactly the treatment and covariates");
}

RegressionProgram program_natural2(int a1, int a2, const PolicyPair& policies,
                                   const VariableRoles& roles) {
  check_index(a1);
  check_index(a2);
  if (roles.has_moc())
    throw MocPresentError("natural functional requires an empty moc (intermediate confounders present)");
  RegressionProgram p;
  p.steps.push_back({step_features(roles, false, true), treat_shift(policies, a1)});
  p.steps.push_back({step_features(roles, false, false), treat_shift(policies, a2)});
  p.key = program_key("nat2", {a1, a2}, policies);
  return p;
}

RegressionProgram program_coupled3(int a1, int a2, int a3, const PolicyPair& policies,
                                   const VariableRoles& roles) {
  check_index(a1);
  check_index(a2);
  check_index(a3);
  if (!roles.has_moc()) throw MocAbsentError("coupled functional requires a non-empty moc");
  RegressionProgram p;
  p.steps.push_back({step_features(roles, true, true), treat_shift(policies, a1)});
  p.steps.push_back({step_features(roles, true, false), treat_shift(policies, a3)});
  p.steps.push_back({step_features(roles, false, false), treat_shift(policies, a2)});
  p.key = program_key("cpl3", {a1, a2, a3}, policies);
  return p;
}

RegressionProgram program_randomized4(int a1, int a2, int a3, int a4, const PolicyPair& policies,
                                      const VariableRoles& roles) {
  check_index(a1);
  check_index(a2);
  check_index(a3);
  check_index(a4);
  if (!roles.has_moc()) throw MocAbsentError("randomized functional requires a non-empty moc");
  RegressionProgram p;
  std::vector<std::string> s1 = step_features(roles, true, true);
  std::vector<std::string> s2;  // (A, M, W): drop Z
  s2.push_back(roles.treatment);
  for (const auto& c : roles.mediators) s2.push_back(c);
  for (const auto& c : roles.covariates) s2.push_back(c);
  p.steps.push_back({std::move(s1), treat_shift(policies, a1, /*swap_z=*/true)});
  p.steps.push_back({std::move(s2), treat_shift(policies, a2)});
  p.steps.push_back({step_features(roles, true, false), treat_shift(policies, a3)});
  p.steps.push_back({step_features(roles, false, false), treat_shift(policies, a4)});
  p.key = program_key("rnd4", {a1, a2, a3, a4}, policies);
  return p;
}

RegressionProgram build_program(const FunctionalSpec& spec, const VariableRoles& roles) {
  switch (spec.kind) {
    case FunctionalKind::kNatural2:
      if (spec.a.size() != 2) throw ValidationError("natural functional takes 2 indices");
      return program_natural2(spec.a[0], spec.a[1], spec.policies, roles);
    case FunctionalKind::kCoupled3:
      if (spec.a.size() != 3) throw ValidationError("coupled functional takes 3 indices");
      return program_coupled3(spec.a[0], spec.a[1], spec.a[2], spec.policies, roles);
    case FunctionalKind::kRandomized4:
      if (spec.a.size() != 4) throw ValidationError("randomized functional takes 4 indices");
      return program_randomized4(spec.a[0], spec.a[1], spec.a[2], spec.a[3], spec.policies, roles);
  }
  throw ValidationError("unknown functional kind");
}

EffectFamilyCode effect_family_from_string(const std::string& code) {
  if (code == "N") return EffectFamilyCode::kNatural;
  if (code == "RI") return EffectFamilyCode::kRandomizedInterventional;
  if (code == "RT") return EffectFamilyCode::kRecantingTwin;
  throw UnknownEffectError("unknown effect family: " + code + " (expected N, RI or RT)");
}

std::string effect_family_to_string(EffectFamilyCode code) {
  switch (code) {
    case EffectFamilyCode::kNatural: return "N";
    case EffectFamilyCode::kRandomizedInterventional: return "RI";
    case EffectFamilyCode::kRecantingTwin: return "RT";
  }
  return "?";
}

std::vector<FunctionalSpec> ContrastTable::functionals() const {
  std::vector<FunctionalSpec> out;
  std::set<std::string> seen;
  for (const auto& e : effects)
    for (const auto& [spec, sign] : e.terms)
      if (seen.insert(spec.key()).second) out.push_back(spec);
  return out;
}

namespace {

FunctionalSpec nat2(int a1, int a2, const PolicyPair& pol) {
  return FunctionalSpec{FunctionalKind::kNatural2, {a1, a2}, pol};
}
FunctionalSpec cpl3(int a1, int a2, int a3, const PolicyPair& pol) {
  return FunctionalSpec{FunctionalKind::kCoupled3, {a1, a2, a3}, pol};
}
FunctionalSpec rnd4(int a1, int a2, int a3, int a4, const PolicyPair& pol) {
  return FunctionalSpec{FunctionalKind::kRandomized4, {a1, a2, a3, a4}, pol};
}

}  // namespace

ContrastTable effects_to_contrasts(EffectFamilyCode family, const PolicyPair& pol,
                                   const VariableRoles& roles) {
  ContrastTable t;
  t.family = family;
  const bool moc = roles.has_moc();

  switch (family) {
    case EffectFamilyCode::kNatural: {
      if (moc)
        throw FamilyRoleMismatchError(
            "effect family N is not identified with intermediate confounders configured (moc)");
      t.has_decomposition = true;
      t.effects.push_back({"NDE", {{nat2(1, 0, pol), +1}, {nat2(0, 0, pol), -1}}});
      t.effects.push_back({"NIE", {{nat2(1, 1, pol), +1}, {nat2(1, 0, pol), -1}}});
      t.effects.push_back({"ATE", {{nat2(1, 1, pol), +1}, {nat2(0, 0, pol), -1}}});
      return t;
    }
    case EffectFamilyCode::kRandomizedInterventional: {
      // RIDE + RIIE does not decompose the ATE when Z is present, so no
      // ATE row and no decomposition block are produced for this family.
      t.has_decomposition = false;
      if (moc) {
        t.effects.push_back({"RIDE", {{rnd4(1, 1, 0, 0, pol), +1}, {rnd4(0, 0, 0, 0, pol), -1}}});
        t.effects.push_back({"RIIE", {{rnd4(1, 1, 1, 1, pol), +1}, {rnd4(1, 1, 0, 0, pol), -1}}});
      } else {
        t.effects.push_back({"RIDE", {{nat2(1, 0, pol), +1}, {nat2(0, 0, pol), -1}}});
        t.effects.push_back({"RIIE", {{nat2(1, 1, pol), +1}, {nat2(1, 0, pol), -1}}});
      }
      return t;
    }
    case EffectFamilyCode::kRecantingTwin: {
      t.has_decomposition = true;
      t.has_remainder = true;
      if (moc) {
        t.effects.push_back({"P1", {{cpl3(1, 1, 1, pol), +1}, {cpl3(0, 1, 1, pol), -1}}});
        t.effects.push_back({"P2", {{rnd4(0, 1, 1, 1, pol), +1}, {rnd4(0, 0, 1, 1, pol), -1}}});
        t.effects.push_back({"P3", {{rnd4(0, 0, 1, 1, pol), +1}, {rnd4(0, 0, 1, 0, pol), -1}}});
        t.effects.push_back({"P4", {{cpl3(0, 0, 1, pol), +1}, {cpl3(0, 0, 0, pol), -1}}});
        t.effects.push_back({"R",
                             {{cpl3(0, 1, 1, pol), +1},
                              {rnd4(0, 1, 1, 1, pol), -1},
                              {rnd4(0, 0, 1, 0, pol), +1},
                              {cpl3(0, 0, 1, pol), -1}}});
        t.effects.push_back({"ATE", {{cpl3(1, 1, 1, pol), +1}, {cpl3(0, 0, 0, pol), -1}}});
      } else {
        // Without Z the paths through Z are structurally empty and the
        // coupled/randomized functionals reduce to the natural ones.
        t.effects.push_back({"P1", {{nat2(1, 1, pol), +1}, {nat2(0, 1, pol), -1}}});
        t.effects.push_back({"P2", {{nat2(0, 1, pol), +1}, {nat2(0, 1, pol), -1}}});
        t.effects.push_back({"P3", {{nat2(0, 1, pol), +1}, {nat2(0, 1, pol), -1}}});
        t.effects.push_back({"P4", {{nat2(0, 1, pol), +1}, {nat2(0, 0, pol), -1}}});
        t.effects.push_back({"R",
                             {{nat2(0, 1, pol), +1},
                              {nat2(0, 1, pol), -1},
                              {nat2(0, 1, pol), +1},
                              {nat2(0, 1, pol), -1}}});
        t.effects.push_back({"ATE", {{nat2(1, 1, pol), +1}, {nat2(0, 0, pol), -1}}});
      }
      return t;
    }
  }
  throw ValidationError("unknown effect family");
}

}  // namespace mediator
