#pragma once

#include <optional>
#include <string>

#include "mediator/policy.hpp"

namespace mediator {

/// A shift applied to a row before evaluating a fitted function on it:
/// optionally map the treatment through a policy and/or replace the Z
/// columns with their permuted copy. W, M, Y and fold labels are never
/// touched.
struct ShiftMap {
  std::optional<Policy> set_treatment;
  bool swap_z = false;

  bool is_identity() const { return !set_treatment.has_value() && !swap_z; }

  std::string key() const {
    std::string k = "[";
    if (set_treatment) k += "A->" + set_treatment->key();
    if (swap_z) k += (set_treatment ? "," : "") + std::string("swapZ");
    k += "]";
    return k;
  }
};

}  // namespace mediator
