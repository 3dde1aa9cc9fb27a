#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/engine.hpp"
#include "mediator/estimands.hpp"
#include "mediator/report.hpp"

namespace mediator {

/// A fully resolved analysis configuration. Defaults: 5 cross-fitting folds,
/// 20 epochs, seed 0, linear-basis representers, convex stacking of
/// {mean, linear, ridge}.
struct RunConfig {
  std::string data_path;
  VariableRoles roles;
  Policy d0 = Policy::constant(0.0);
  Policy d1 = Policy::constant(1.0);
  EffectFamilyCode effect = EffectFamilyCode::kRecantingTwin;
  std::vector<std::string> learners = {"mean", "linear", "ridge"};
  std::string stacking = "convex";
  int learner_cv_folds = 5;
  int crossfit_folds = 5;
  int epochs = 20;
  std::uint64_t seed = 0;
  std::string zpi_strategy = "stratum";  // or "matched"
  bool allow_cross_world = false;

  // representer settings (riesz.*)
  std::string riesz_kind = "linear";  // or "ff"
  double riesz_lambda = 1e-3;
  double riesz_lr = 1e-2;
  double riesz_clip = 50.0;
  int riesz_hidden = 32;
  int riesz_degree = 2;
  bool riesz_saturated = false;

  std::string output;
  std::string format = "table";

  void validate() const;
  EngineConfig engine() const;
  PolicyPair policies() const { return PolicyPair{d0, d1}; }

  /// Canonical JSON used for hashing and echoing.
  std::string canonical_json() const;
};

/// Command-line overrides applied on top of a config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> effect;
  std::optional<int> folds;
  std::optional<int> epochs;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<bool> allow_cross_world;
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Executes the full pipeline: load, augment, fold, estimate, contrast,
/// falsify (RT), and assemble the report.
EffectReport run(const RunConfig& config);

/// FNV-1a hash of a string, hex-encoded; used for the manifest config hash.
std::string fnv1a_hex(const std::string& text);

}  // namespace mediator
