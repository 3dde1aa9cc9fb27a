#include "mediator/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

EffectReport build_report(const FamilyEstimate& est, const ContrastTable& table,
                          RunManifest manifest) {
  EffectReport r;
  r.effect_family = effect_family_to_string(est.family);
  for (const auto& e : est.effects) {
    EffectRow row;
    row.name = e.name;
    row.estimate = e.onestep;
    row.plugin = e.plugin;
    row.se = e.se;
    row.ci_lower = e.ci_lower;
    row.ci_upper = e.ci_upper;
    r.effects.push_back(row);
  }

  r.has_decomposition = table.has_decomposition;
  if (table.has_decomposition) {
    double sum = 0.0;
    for (const auto& e : est.effects) {
      if (e.name == "ATE") {
        r.decomposition_ate = e.onestep;
      } else {
        r.decomposition_components.push_back(e.name);
        sum += e.onestep;
      }
    }
    r.decomposition_sum = sum;
  }

  r.falsification = est.falsification;
  r.warnings = est.warnings;
  manifest.fold_sizes = est.fold_sizes;
  manifest.learner_picks = est.learner_picks;
  manifest.riesz_losses = est.riesz_losses;
  manifest.alpha_clipped = est.alpha_clipped_total;
  manifest.positivity = est.positivity;
  r.manifest = std::move(manifest);
  return r;
}

namespace {

json positivity_to_json(const PositivityDiagnostics& p) {
  json j;
  j["min"] = p.min;
  j["max"] = p.max;
  j["q01"] = p.q01;
  j["q25"] = p.q25;
  j["median"] = p.median;
  j["q75"] = p.q75;
  j["q99"] = p.q99;
  j["clip_bound"] = p.clip_bound;
  j["n_clipped"] = p.n_clipped;
  j["frac_clipped"] = p.frac_clipped;
  j["flagged"] = p.flagged;
  return j;
}

PositivityDiagnostics positivity_from_json(const json& j) {
  PositivityDiagnostics p;
  p.min = j.value("min", 0.0);
  p.max = j.value("max", 0.0);
  p.q01 = j.value("q01", 0.0);
  p.q25 = j.value("q25", 0.0);
  p.median = j.value("median", 0.0);
  p.q75 = j.value("q75", 0.0);
  p.q99 = j.value("q99", 0.0);
  p.clip_bound = j.value("clip_bound", 0.0);
  p.n_clipped = j.value("n_clipped", std::size_t{0});
  p.frac_clipped = j.value("frac_clipped", 0.0);
  p.flagged = j.value("flagged", false);
  return p;
}

}  // namespace

std::string report_to_json_text(const EffectReport& r) {
  json j;
  j["schema"] = r.schema;
  j["effect_family"] = r.effect_family;
  j["effects"] = json::array();
  for (const auto& e : r.effects) {
    json row;
    row["name"] = e.name;
    row["estimate"] = e.estimate;
    row["plugin"] = e.plugin;
    row["se"] = e.se;
    row["ci_lower"] = e.ci_lower;
    row["ci_upper"] = e.ci_upper;
    j["effects"].push_back(row);
  }
  if (r.has_decomposition) {
    json d;
    d["components"] = r.decomposition_components;
    d["sum"] = r.decomposition_sum;
    d["ate"] = r.decomposition_ate;
    j["decomposition"] = d;
  }
  if (r.falsification) {
    json f;
    f["statistic"] = r.falsification->statistic;
    f["p_value"] = r.falsification->p_value;
    f["alpha"] = r.falsification->alpha;
    f["reject"] = r.falsification->reject;
    f["conclusion"] = r.falsification->conclusion;
    j["falsification"] = f;
  }
  j["warnings"] = r.warnings;

  json m;
  m["config_hash"] = r.manifest.config_hash;
  m["seed"] = r.manifest.seed;
  m["fold_sizes"] = r.manifest.fold_sizes;
  m["learner_picks"] = r.manifest.learner_picks;
  m["riesz_losses"] = r.manifest.riesz_losses;
  m["alpha_clipped"] = r.manifest.alpha_clipped;
  m["positivity"] = positivity_to_json(r.manifest.positivity);
  j["manifest"] = m;
  return j.dump(2) + "\n";
}

EffectReport report_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("bad report JSON: ") + e.what());
  }
  EffectReport r;
  r.schema = j.at("schema").get<std::string>();
  r.effect_family = j.at("effect_family").get<std::string>();
  for (const auto& row : j.at("effects")) {
    EffectRow e;
    e.name = row.at("name").get<std::string>();
    e.estimate = row.at("estimate").get<double>();
    e.plugin = row.at("plugin").get<double>();
    e.se = row.at("se").get<double>();
    e.ci_lower = row.at("ci_lower").get<double>();
    e.ci_upper = row.at("ci_upper").get<double>();
    r.effects.push_back(e);
  }
  if (j.contains("decomposition")) {
    r.has_decomposition = true;
    r.decomposition_components =
        j["decomposition"].at("components").get<std::vector<std::string>>();
    r.decomposition_sum = j["decomposition"].at("sum").get<double>();
    r.decomposition_ate = j["decomposition"].at("ate").get<double>();
  }
  if (j.contains("falsification")) {
    FalsificationResult f;
    f.statistic = j["falsification"].at("statistic").get<double>();
    f.p_value = j["falsification"].at("p_value").get<double>();
    f.alpha = j["falsification"].at("alpha").get<double>();
    f.reject = j["falsification"].at("reject").get<bool>();
    f.conclusion = j["falsification"].at("conclusion").get<std::string>();
    r.falsification = f;
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  const json& m = j.at("manifest");
  r.manifest.config_hash = m.value("config_hash", std::string{});
  r.manifest.seed = m.value("seed", 0ULL);
  r.manifest.fold_sizes = m.value("fold_sizes", std::vector<std::size_t>{});
  r.manifest.learner_picks =
      m.value("learner_picks", std::map<std::string, std::vector<std::string>>{});
  r.manifest.riesz_losses = m.value("riesz_losses", std::map<std::string, std::vector<double>>{});
  r.manifest.alpha_clipped = m.value("alpha_clipped", std::size_t{0});
  if (m.contains("positivity")) r.manifest.positivity = positivity_from_json(m["positivity"]);
  return r;
}

namespace {

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string render_table(const EffectReport& r) {
  std::ostringstream out;
  out << "Effect family: " << r.effect_family << "\n";
  out << "----------------------------------------------\n";
  out << "            Estimate   95% CI\n";
  for (const auto& e : r.effects) {
    char line[128];
    const std::string ci = "(" + fmt3(e.ci_lower) + ", " + fmt3(e.ci_upper) + ")";
    std::snprintf(line, sizeof(line), "%-10s  %8s   %s\n", e.name.c_str(), fmt3(e.estimate).c_str(),
                  ci.c_str());
    out << line;
  }
  if (r.has_decomposition) {
    out << "----------------------------------------------\n";
    out << "Decomposition: ";
    for (std::size_t i = 0; i < r.decomposition_components.size(); ++i)
      out << (i ? " + " : "") << r.decomposition_components[i];
    out << " = " << fmt3(r.decomposition_sum) << "  (ATE " << fmt3(r.decomposition_ate) << ")\n";
  }
  if (r.falsification) {
    out << "----------------------------------------------\n";
    out << "Falsification (H0: R = 0): z = " << fmt3(r.falsification->statistic)
        << ", p = " << fmt3(r.falsification->p_value) << "\n  " << r.falsification->conclusion
        << "\n";
  }
  return out.str();
}

void report_emit(const EffectReport& report, const std::string& format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path);
  if (format == "json")
    out << report_to_json_text(report);
  else if (format == "table")
    out << render_table(report);
  else
    throw ValidationError("unknown report format: " + format + " (expected json or table)");
  if (!out) throw IoError("failed writing report to " + path);
}

}  // namespace mediator
