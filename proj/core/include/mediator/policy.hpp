#pragma once

#include <functional>
#include <string>

namespace mediator {

/// Looks up a named column's value on the current row (natural, unshifted
/// values). Policies use it to read the covariate a threshold rule points at.
using ColumnLookup = std::function<double(const std::string&)>;

/// A modified treatment policy d(a, w). `natural` is the identity, `constant`
/// assigns one level to everybody, and `threshold_shift` adds `delta`
/// (bounded below by `floor`) whenever the named column is at or above
/// `cutoff`. The named column may be the treatment itself, so rules like
/// "a - 1 when a >= 2" are expressible.
struct Policy {
  enum class Rule { kConstant, kNatural, kThresholdShift };

  Rule rule = Rule::kNatural;
  double level = 0.0;
  std::string covariate;
  double cutoff = 0.0;
  double delta = 0.0;
  double floor = 0.0;
  std::string description;

  static Policy constant(double level);
  static Policy natural();
  static Policy threshold_shift(std::string covariate, double cutoff, double delta, double floor);

  double apply(double a, const ColumnLookup& row) const;
  std::string key() const;  // stable identity for caching
};

/// Pure evaluation of d(a, w).
double apply_policy(const Policy& p, double a, const ColumnLookup& row);

/// The pair (d0, d1) a mediation analysis contrasts. Index 0 or 1 selects
/// the policy, mirroring binary treatment levels.
struct PolicyPair {
  Policy d0 = Policy::constant(0.0);
  Policy d1 = Policy::constant(1.0);

  const Policy& at(int index) const;
};

}  // namespace mediator
