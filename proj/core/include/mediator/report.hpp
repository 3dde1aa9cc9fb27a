#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/engine.hpp"

namespace mediator {

struct EffectRow {
  std::string name;
  double estimate = 0.0;   // one-step (headline)
  double plugin = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_sizes;
  std::map<std::string, std::vector<std::string>> learner_picks;  // per functional
  std::map<std::string, std::vector<double>> riesz_losses;        // per functional
  std::size_t alpha_clipped = 0;
  PositivityDiagnostics positivity;
};

/// The machine- and human-readable result of one analysis run.
struct EffectReport {
  std::string schema = "mediator-report/1";
  std::string effect_family;  // "N", "RI", "RT"
  std::vector<EffectRow> effects;

  bool has_decomposition = false;
  std::vector<std::string> decomposition_components;
  double decomposition_sum = 0.0;
  double decomposition_ate = 0.0;

  std::optional<FalsificationResult> falsification;
  std::vector<std::string> warnings;
  RunManifest manifest;
};

EffectReport build_report(const FamilyEstimate& estimates, const ContrastTable& table,
                          RunManifest manifest);

std::string report_to_json_text(const EffectReport& report);
EffectReport report_from_json_text(const std::string& text);

/// Table-1 style rendering with 3-decimal rounding.
std::string render_table(const EffectReport& report);

/// Writes the report to `path` in the requested format ("json" or "table").
void report_emit(const EffectReport& report, const std::string& format, const std::string& path);

}  // namespace mediator
