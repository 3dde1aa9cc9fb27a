// Command-line front end: run analyses from a config file, simulate data
// from an SCM fixture, or print Monte Carlo truth tables.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mediator/config.hpp"
#include "mediator/errors.hpp"
#include "mediator/oracle.hpp"
#include "mediator/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int cmd_run(const std::string& config_path, const mediator::ConfigOverrides& overrides) {
  const mediator::RunConfig config = mediator::parse_config(config_path, overrides);
  const mediator::EffectReport report = mediator::run(config);

  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << mediator::render_table(report);
  if (!config.output.empty()) {
    mediator::report_emit(report, config.format, config.output);
    std::cerr << "report written to " << config.output << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& scm_path, std::size_t n, std::uint64_t seed,
                 const std::string& out_path) {
  const mediator::Scm scm = mediator::load_scm(scm_path);
  const mediator::MediationDataset data =
      mediator::simulate(scm, n, seed == 0 ? scm.seed : seed);
  std::ofstream out(out_path);
  if (!out) throw mediator::IoError("cannot write " + out_path);
  for (std::size_t c = 0; c < data.columns.size(); ++c)
    out << (c ? "," : "") << data.columns[c];
  out << "\n";
  out.precision(10);
  for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.values.cols(); ++c)
      out << (c ? "," : "") << data.values(r, c);
    out << "\n";
  }
  std::cerr << "wrote " << data.n() << " rows to " << out_path << "\n";
  return kExitOk;
}

int cmd_truth(const std::string& scm_path, const std::string& effect, std::size_t draws,
              std::uint64_t seed, const mediator::PolicyPair& policies) {
  const mediator::Scm scm = mediator::load_scm(scm_path);
  const auto family = mediator::effect_family_from_string(effect);
  const mediator::TruthTable table =
      mediator::truth_table(scm, family, policies, draws, seed == 0 ? scm.seed : seed);
  std::cout << "truth table (" << table.draws << " draws)\n";
  std::cout << "name          value        mc_se\n";
  for (const auto& [name, tv] : table.entries) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %12.6f %12.6f\n", name.c_str(), tv.value, tv.mc_se);
    std::cout << line;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mediation effect estimation (natural, randomized-interventional, recanting-twin)"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run an analysis from a config file");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "path to a JSON config")->required();
  std::uint64_t seed = 0;
  std::string effect, out_path, format;
  int folds = 0, epochs = 0;
  bool allow_cross_world = false;
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");
  auto* effect_opt = run_cmd->add_option("--effect", effect, "override effect family: N, RI or RT");
  auto* folds_opt = run_cmd->add_option("--folds", folds, "override cross-fitting folds");
  auto* epochs_opt = run_cmd->add_option("--epochs", epochs, "override training epochs");
  auto* out_opt = run_cmd->add_option("--out", out_path, "report output path");
  auto* format_opt = run_cmd->add_option("--format", format, "report format: json or table");
  run_cmd->add_flag("--allow-cross-world", allow_cross_world,
                    "compute natural effects even when moc columns are configured");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "draw a dataset from an SCM fixture");
  std::string scm_path, sim_out;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 0;
  sim_cmd->add_option("--scm", scm_path, "path to an SCM JSON fixture")->required();
  sim_cmd->add_option("--n", sim_n, "number of rows")->required();
  sim_cmd->add_option("--out", sim_out, "output CSV path")->required();
  sim_cmd->add_option("--seed", sim_seed, "seed (default: the fixture seed)");

  // truth
  auto* truth_cmd = app.add_subcommand("truth", "Monte Carlo truth table for an SCM");
  std::string truth_scm, truth_effect = "RT";
  std::size_t draws = 100000;
  std::uint64_t truth_seed = 0;
  truth_cmd->add_option("--scm", truth_scm, "path to an SCM JSON fixture")->required();
  truth_cmd->add_option("--effect", truth_effect, "effect family: N, RI or RT");
  truth_cmd->add_option("--draws", draws, "Monte Carlo draws");
  truth_cmd->add_option("--seed", truth_seed, "seed (default: the fixture seed)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run_cmd)) {
      mediator::ConfigOverrides ov;
      if (*seed_opt) ov.seed = seed;
      if (*effect_opt) ov.effect = effect;
      if (*folds_opt) ov.folds = folds;
      if (*epochs_opt) ov.epochs = epochs;
      if (*out_opt) ov.output = out_path;
      if (*format_opt) ov.format = format;
      if (allow_cross_world) ov.allow_cross_world = true;
      return cmd_run(config_path, ov);
    }
    if (app.got_subcommand(sim_cmd)) return cmd_simulate(scm_path, sim_n, sim_seed, sim_out);
    if (app.got_subcommand(truth_cmd))
      return cmd_truth(truth_scm, truth_effect, draws, truth_seed, mediator::PolicyPair{});
  } catch (const mediator::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const mediator::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mediator::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
