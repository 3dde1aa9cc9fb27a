#include "mediator/policy.hpp"

#include <algorithm>
#include <sstream>

#include "mediator/errors.hpp"

namespace mediator {

Policy Policy::constant(double level) {
  Policy p;
  p.rule = Rule::kConstant;
  p.level = level;
  std::ostringstream d;
  d << "constant(" << level << ")";
  p.description = d.str();
  return p;
}

Policy Policy::natural() {
  Policy p;
  p.rule = Rule::kNatural;
  p.description = "natural";
  return p;
}

Policy Policy::threshold_shift(std::string covariate, double cutoff, double delta, double floor) {
  Policy p;
  p.rule = Rule::kThresholdShift;
  p.covariate = std::move(covariate);
  p.cutoff = cutoff;
  p.delta = delta;
  p.floor = floor;
  std::ostringstream d;
  d << "threshold_shift(" << p.covariate << ", " << cutoff << ", " << delta << ", " << floor << ")";
  p.description = d.str();
  return p;
}

double Policy::apply(double a, const ColumnLookup& row) const {
  switch (rule) {
    case Rule::kConstant:
      return level;
    case Rule::kNatural:
      return a;
    case Rule::kThresholdShift: {
      const double v = row(covariate);
      if (v >= cutoff) return std::max(a + delta, floor);
      return a;
    }
  }
  throw BadPolicyError("unknown policy rule");
}

std::string Policy::key() const { return description; }

double apply_policy(const Policy& p, double a, const ColumnLookup& row) { return p.apply(a, row); }

const Policy& PolicyPair::at(int index) const {
  if (index == 0) return d0;
  if (index == 1) return d1;
  throw BadPolicyError("policy index must be 0 or 1");
}

}  // namespace mediator
