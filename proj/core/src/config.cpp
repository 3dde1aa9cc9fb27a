#include "mediator/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

namespace {

Policy policy_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw BadPolicyError("policy must be an object with a type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    if (!j.contains("level")) throw BadPolicyError("constant policy needs a level");
    return Policy::constant(j.at("level").get<double>());
  }
  if (type == "natural") return Policy::natural();
  if (type == "threshold_shift") {
    for (const char* k : {"covariate", "cutoff", "delta", "floor"})
      if (!j.contains(k)) throw BadPolicyError(std::string("threshold_shift policy needs ") + k);
    return Policy::threshold_shift(j.at("covariate").get<std::string>(), j.at("cutoff").get<double>(),
                                   j.at("delta").get<double>(), j.at("floor").get<double>());
  }
  throw BadPolicyError("unknown policy type: " + type);
}

json policy_to_json(const Policy& p) {
  json j;
  switch (p.rule) {
    case Policy::Rule::kConstant:
      j["type"] = "constant";
      j["level"] = p.level;
      break;
    case Policy::Rule::kNatural:
      j["type"] = "natural";
      break;
    case Policy::Rule::kThresholdShift:
      j["type"] = "threshold_shift";
      j["covariate"] = p.covariate;
      j["cutoff"] = p.cutoff;
      j["delta"] = p.delta;
      j["floor"] = p.floor;
      break;
  }
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (data_path.empty()) throw ValidationError("config: data path is required");
  roles.validate();
  (void)effect_family_from_string(effect_family_to_string(effect));
  if (crossfit_folds < 1) throw ValidationError("config: crossfit_folds must be >= 1");
  if (epochs < 1) throw ValidationError("config: epochs must be >= 1");
  if (learner_cv_folds < 2) throw ValidationError("config: learner_cv_folds must be >= 2");
  if (learners.empty()) throw ValidationError("config: at least one learner is required");
  for (const auto& l : learners) (void)LearnerSpec::from_name(l);
  if (stacking != "convex" && stacking != "discrete")
    throw ValidationError("config: stacking must be convex or discrete");
  if (riesz_kind != "linear" && riesz_kind != "ff")
    throw ValidationError("config: riesz.kind must be linear or ff");
  if (zpi_strategy != "stratum" && zpi_strategy != "matched")
    throw ValidationError("config: zpi_strategy must be stratum or matched");
  if (format != "json" && format != "table")
    throw ValidationError("config: format must be json or table");
  if (effect == EffectFamilyCode::kNatural && roles.has_moc() && !allow_cross_world)
    throw FamilyRoleMismatchError(
        "effect N refused: moc columns are configured, so Z is likely an intermediate confounder "
        "and natural effects are not identified; pass allow_cross_world to override");
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  for (const auto& l : learners) e.learners.push_back(LearnerSpec::from_name(l));
  e.learner_cv_folds = learner_cv_folds;
  e.stacking = stacking == "discrete" ? Stacking::kDiscrete : Stacking::kConvex;
  e.seed = seed;
  e.riesz.kind = riesz_kind == "ff" ? RieszKind::kFeedforward : RieszKind::kLinearBasis;
  e.riesz.clip = riesz_clip;
  e.riesz.basis.degree = riesz_degree;
  e.riesz.basis.saturated = riesz_saturated;
  e.riesz.basis.lambda = riesz_lambda;
  e.riesz.basis.clip = riesz_clip;
  e.riesz.feedforward.hidden = riesz_hidden;
  e.riesz.feedforward.epochs = epochs;
  e.riesz.feedforward.lr = riesz_lr;
  return e;
}

std::string RunConfig::canonical_json() const {
  json j;
  j["data"] = data_path;
  json roles_j;
  roles_j["treatment"] = roles.treatment;
  roles_j["outcome"] = roles.outcome;
  roles_j["mediators"] = roles.mediators;
  roles_j["moc"] = roles.moc;
  roles_j["covariates"] = roles.covariates;
  if (!roles.id.empty()) roles_j["id"] = roles.id;
  j["roles"] = roles_j;
  j["d0"] = policy_to_json(d0);
  j["d1"] = policy_to_json(d1);
  j["effect"] = effect_family_to_string(effect);
  j["learners"] = learners;
  j["stacking"] = stacking;
  j["learner_cv_folds"] = learner_cv_folds;
  j["crossfit_folds"] = crossfit_folds;
  j["epochs"] = epochs;
  j["seed"] = seed;
  j["zpi_strategy"] = zpi_strategy;
  j["allow_cross_world"] = allow_cross_world;
  json riesz;
  riesz["kind"] = riesz_kind;
  riesz["lambda"] = riesz_lambda;
  riesz["lr"] = riesz_lr;
  riesz["clip"] = riesz_clip;
  riesz["hidden"] = riesz_hidden;
  riesz["degree"] = riesz_degree;
  riesz["saturated"] = riesz_saturated;
  riesz["epochs"] = epochs;
  j["riesz"] = riesz;
  return j.dump();
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("bad config JSON: ") + e.what());
  }

  RunConfig c;
  c.data_path = j.value("data", std::string{});
  if (j.contains("roles")) {
    const json& r = j["roles"];
    c.roles.treatment = r.value("treatment", std::string{});
    c.roles.outcome = r.value("outcome", std::string{});
    c.roles.mediators = r.value("mediators", std::vector<std::string>{});
    c.roles.moc = r.value("moc", std::vector<std::string>{});
    c.roles.covariates = r.value("covariates", std::vector<std::string>{});
    c.roles.id = r.value("id", std::string{});
  }
  if (j.contains("d0")) c.d0 = policy_from_json(j["d0"]);
  if (j.contains("d1")) c.d1 = policy_from_json(j["d1"]);
  if (j.contains("effect")) c.effect = effect_family_from_string(j["effect"].get<std::string>());
  if (j.contains("learners")) c.learners = j["learners"].get<std::vector<std::string>>();
  c.stacking = j.value("stacking", c.stacking);
  c.learner_cv_folds = j.value("learner_cv_folds", c.learner_cv_folds);
  c.crossfit_folds = j.value("crossfit_folds", c.crossfit_folds);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.zpi_strategy = j.value("zpi_strategy", c.zpi_strategy);
  c.allow_cross_world = j.value("allow_cross_world", c.allow_cross_world);
  c.output = j.value("output", c.output);
  c.format = j.value("format", c.format);
  if (j.contains("riesz")) {
    const json& r = j["riesz"];
    c.riesz_kind = r.value("kind", c.riesz_kind);
    c.riesz_lambda = r.value("lambda", c.riesz_lambda);
    c.riesz_lr = r.value("lr", c.riesz_lr);
    c.riesz_clip = r.value("clip", c.riesz_clip);
    c.riesz_hidden = r.value("hidden", c.riesz_hidden);
    c.riesz_degree = r.value("degree", c.riesz_degree);
    c.riesz_saturated = r.value("saturated", c.riesz_saturated);
    if (r.contains("epochs")) c.epochs = r["epochs"].get<int>();
  }
  return c;
}

RunConfig parse_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config_text(ss.str());

  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.effect) c.effect = effect_family_from_string(*overrides.effect);
  if (overrides.folds) c.crossfit_folds = *overrides.folds;
  if (overrides.epochs) c.epochs = *overrides.epochs;
  if (overrides.output) c.output = *overrides.output;
  if (overrides.format) c.format = *overrides.format;
  if (overrides.allow_cross_world) c.allow_cross_world = *overrides.allow_cross_world;

  c.validate();
  return c;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EffectReport run(const RunConfig& config) {
  config.validate();

  VariableRoles roles = config.roles;
  std::vector<std::string> warnings;
  if (config.effect == EffectFamilyCode::kNatural && roles.has_moc()) {
    // allow_cross_world was checked in validate(); honoring it means the Z
    // columns are dropped from the analysis and the assumption is surfaced.
    warnings.push_back(
        "cross-world override: moc columns ignored for natural effects; estimates rely on the "
        "cross-world counterfactual independence assumption");
    roles.moc.clear();
  }

  const MediationDataset data = load_csv(config.data_path, roles);
  const ZpiStrategy strategy = config.zpi_strategy == "matched"
                                   ? ZpiStrategy::kMatchedWithinCovariates
                                   : ZpiStrategy::kTreatmentStratum;
  AugmentedDataset aug = augment_zpi(data, config.seed, strategy);
  aug = make_folds(std::move(aug), config.crossfit_folds, config.seed);

  const ContrastTable table = effects_to_contrasts(config.effect, config.policies(), roles);
  const FamilyEstimate estimates = estimate_family(table, aug, config.engine());

  RunManifest manifest;
  manifest.config_hash = fnv1a_hex(config.canonical_json());
  manifest.seed = config.seed;
  EffectReport report = build_report(estimates, table, std::move(manifest));
  for (const auto& w : warnings) report.warnings.insert(report.warnings.begin(), w);
  return report;
}

}  // namespace mediator
