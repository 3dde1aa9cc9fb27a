#include "mediator/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mediator/errors.hpp"
#include "mediator/rng.hpp"

namespace mediator {

namespace {

bool is_binary01(const Vec& y) {
  bool saw0 = false, saw1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0)
      saw0 = true;
    else if (y(i) == 1.0)
      saw1 = true;
    else
      return false;
  }
  return saw0 && saw1;
}

std::vector<std::vector<std::size_t>> fold_partition(const AugmentedDataset& data) {
  const int v = std::max(1, data.folds);
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(v));
  if (v == 1 || data.fold.empty()) {
    rows[0].resize(data.n());
    std::iota(rows[0].begin(), rows[0].end(), std::size_t{0});
    return rows;
  }
  for (std::size_t i = 0; i < data.n(); ++i) rows[static_cast<std::size_t>(data.fold[i] - 1)].push_back(i);
  return rows;
}

Mat rows_of(const Mat& x, const std::vector<std::size_t>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Vec entries_of(const Vec& v, const std::vector<std::size_t>& rows) {
  Vec out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::string prefix_key(const RegressionProgram& program, std::size_t k) {
  std::ostringstream s;
  for (std::size_t j = 0; j < k; ++j) {
    s << "|f:";
    for (const auto& c : program.steps[j].features) s << c << ",";
    s << ";s:" << program.steps[j].consume_shift.key();
  }
  return s.str();
}

std::string suffix_key(const RegressionProgram& program, std::size_t k) {
  std::ostringstream s;
  for (std::size_t j = k - 1; j < program.depth(); ++j) {
    s << "|f:";
    for (const auto& c : program.steps[j].features) s << c << ",";
    s << ";s:" << program.steps[j].consume_shift.key();
  }
  return s.str();
}

std::uint64_t key_seed(std::uint64_t seed, const std::string& key, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  for (char c : key) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return Rng::mix(seed, h);
}

double sample_sd(const Vec& v) {
  const Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

namespace {

std::vector<std::size_t> train_rows(const std::vector<std::vector<std::size_t>>& folds, int f) {
  const int v = static_cast<int>(folds.size());
  if (v == 1) return folds[0];
  std::vector<std::size_t> train;
  for (int g = 0; g < v; ++g)
    if (g != f)
      train.insert(train.end(), folds[static_cast<std::size_t>(g)].begin(),
                   folds[static_cast<std::size_t>(g)].end());
  std::sort(train.begin(), train.end());
  return train;
}

// One constant-shift chain: sequential regressions innermost first, then
// representers outermost first with `outer_weight` as the outermost loss
// weight. Contributes its correction terms, masked terminal evaluations and
// plug-in share into `art`.
void run_chain(const RegressionProgram& program, const AugmentedDataset& data,
               const EngineConfig& config, StepCache* cache, const Vec& outer_weight,
               const std::string& weight_key, FitArtifacts& art) {
  const std::size_t n = data.n();
  const Vec& y = art.outcome;
  const auto folds = fold_partition(data);
  const int v = static_cast<int>(folds.size());
  const std::size_t k_steps = program.depth();

  std::vector<StepArtifacts> chain(k_steps);

  // --- sequential regressions, innermost first -----------------------------
  for (std::size_t k = 1; k <= k_steps; ++k) {
    const ProgramStep& step = program.steps[k - 1];
    const std::string key = prefix_key(program, k);
    bool cached = false;
    if (cache) {
      auto it = cache->nu.find(key);
      if (it != cache->nu.end()) {
        chain[k - 1].nu_obs = it->second.nu_obs;
        chain[k - 1].nu_shifted = it->second.nu_shifted;
        chain[k - 1].learner_selected = it->second.learner_selected;
        chain[k - 1].learner_weights = it->second.learner_weights;
        cached = true;
      }
    }
    if (!cached) {
      FeatureExtractor fx(data, step.features);
      const Mat x_obs = fx.extract(ShiftMap{});
      const Mat x_shift = fx.extract(step.consume_shift);
      const Vec target = k == 1 ? y : chain[k - 2].nu_shifted;

      EnsembleSpec espec;
      espec.candidates = config.learners;
      espec.cv_folds = config.learner_cv_folds;
      espec.stacking = config.stacking;
      espec.target = (k == 1 && is_binary01(y)) ? TargetType::kBinary : TargetType::kContinuous;

      StepArtifacts& sa = chain[k - 1];
      sa.nu_obs = Vec::Zero(static_cast<Eigen::Index>(n));
      sa.nu_shifted = Vec::Zero(static_cast<Eigen::Index>(n));

      for (int f = 0; f < v; ++f) {
        const auto train = train_rows(folds, f);
        const auto& test = folds[static_cast<std::size_t>(f)];
        const FittedRegressor fit =
            fit_ensemble(espec, rows_of(x_obs, train), entries_of(target, train),
                         key_seed(config.seed, key, 11 + static_cast<std::uint64_t>(f)));
        sa.learner_selected.push_back(fit.selected);
        sa.learner_weights.push_back(fit.weights);

        const Vec p_obs = fit.predict(rows_of(x_obs, test));
        const Vec p_shift = fit.predict(rows_of(x_shift, test));
        for (std::size_t i = 0; i < test.size(); ++i) {
          sa.nu_obs(static_cast<Eigen::Index>(test[i])) = p_obs(static_cast<Eigen::Index>(i));
          sa.nu_shifted(static_cast<Eigen::Index>(test[i])) = p_shift(static_cast<Eigen::Index>(i));
        }
      }
      if (cache) cache->nu.emplace(key, sa);
    }
  }

  // --- representers, outermost first ----------------------------------------
  Vec weights = outer_weight;
  for (std::size_t k = k_steps; k >= 1; --k) {
    const ProgramStep& step = program.steps[k - 1];
    const std::string key = suffix_key(program, k) + weight_key;
    StepArtifacts& sa = chain[k - 1];
    bool cached = false;
    if (cache) {
      auto it = cache->alpha.find(key);
      if (it != cache->alpha.end()) {
        sa.alpha_obs = it->second.alpha_obs;
        sa.riesz_loss = it->second.riesz_loss;
        sa.riesz_trace = it->second.riesz_trace;
        sa.alpha_clipped = it->second.alpha_clipped;
        weights = sa.alpha_obs;
        cached = true;
      }
    }
    if (!cached) {
      FeatureExtractor fx(data, step.features);
      const Mat x_obs = fx.extract(ShiftMap{});
      const Mat x_shift = fx.extract(step.consume_shift);
      int treatment_col = -1;
      for (std::size_t j = 0; j < step.features.size(); ++j)
        if (step.features[j] == data.base.roles.treatment) treatment_col = static_cast<int>(j);

      sa.alpha_obs = Vec::Zero(static_cast<Eigen::Index>(n));
      for (int f = 0; f < v; ++f) {
        const auto train = train_rows(folds, f);
        const auto& test = folds[static_cast<std::size_t>(f)];
        RieszFit fit;
        try {
          fit = fit_riesz_step(rows_of(x_obs, train), rows_of(x_shift, train),
                               entries_of(weights, train), config.riesz, treatment_col,
                               key_seed(config.seed, key, 97 + static_cast<std::uint64_t>(f)));
        } catch (const Error& e) {
          throw NumericalError("riesz fit failed (fold " + std::to_string(f + 1) + ", step " +
                               std::to_string(k) + "): " + e.what());
        }
        sa.riesz_loss.push_back(fit.final_loss);
        sa.riesz_trace.push_back(fit.loss_trace);

        const Mat x_test = rows_of(x_obs, test);
        for (std::size_t i = 0; i < test.size(); ++i) {
          const double a = fit.eval(Vec(x_test.row(static_cast<Eigen::Index>(i))));
          sa.alpha_obs(static_cast<Eigen::Index>(test[i])) = a;
          if (std::abs(a) >= fit.clip_bound - 1e-12) ++sa.alpha_clipped;
        }
      }
      weights = sa.alpha_obs;
      if (cache) cache->alpha.emplace(key, sa);
    }
  }

  // --- contribute chain pieces ----------------------------------------------
  for (std::size_t k = 1; k <= k_steps; ++k) {
    const StepArtifacts& sa = chain[k - 1];
    const Vec prev = k == 1 ? y : chain[k - 2].nu_shifted;
    art.corrections[k - 1] += sa.alpha_obs.cwiseProduct(prev - sa.nu_obs);

    StepArtifacts& out = art.steps[k - 1];
    if (out.alpha_obs.size() == 0) out.alpha_obs = Vec::Zero(static_cast<Eigen::Index>(n));
    out.alpha_obs += sa.alpha_obs;
    out.nu_obs = sa.nu_obs;
    out.nu_shifted = sa.nu_shifted;
    out.alpha_clipped += sa.alpha_clipped;
    for (std::size_t f = 0; f < sa.learner_selected.size(); ++f) {
      out.learner_selected.push_back(sa.learner_selected[f]);
      out.learner_weights.push_back(sa.learner_weights[f]);
    }
    for (std::size_t f = 0; f < sa.riesz_loss.size(); ++f) {
      out.riesz_loss.push_back(sa.riesz_loss[f]);
      out.riesz_trace.push_back(sa.riesz_trace[f]);
    }
  }
  art.terminal += outer_weight.cwiseProduct(chain[k_steps - 1].nu_shifted);
}

// Per-row values of every policy-bearing consume shift; rows with equal
// vectors share a pattern cell.
std::vector<Vec> shift_patterns(const RegressionProgram& program, const AugmentedDataset& data) {
  std::vector<Vec> values;
  for (const auto& step : program.steps)
    if (step.consume_shift.set_treatment)
      values.push_back(shifted_treatment(data, *step.consume_shift.set_treatment));
  return values;
}

bool all_shifts_constant(const RegressionProgram& program) {
  for (const auto& step : program.steps)
    if (step.consume_shift.set_treatment &&
        step.consume_shift.set_treatment->rule != Policy::Rule::kConstant)
      return false;
  return true;
}

}  // namespace

FitArtifacts run_program(const RegressionProgram& program, const AugmentedDataset& data,
                         const EngineConfig& config, StepCache* cache) {
  const std::size_t n = data.n();
  const Vec y = data.base.column(data.base.roles.outcome);

  FitArtifacts art;
  art.outcome = y;
  art.fold = data.fold.empty() ? std::vector<int>(n, 1) : data.fold;
  const std::size_t k_steps = program.depth();
  art.steps.resize(k_steps);
  art.corrections.assign(k_steps, Vec::Zero(static_cast<Eigen::Index>(n)));
  art.terminal = Vec::Zero(static_cast<Eigen::Index>(n));

  if (k_steps == 0) {  // degenerate program: average the outcome
    art.plugin = y.mean();
    art.terminal = y;
    return art;
  }

  program.validate(data.base.roles);

  if (all_shifts_constant(program)) {
    run_chain(program, data, config, cache, Vec::Ones(static_cast<Eigen::Index>(n)), "", art);
    art.plugin = art.terminal.mean();
    return art;
  }

  // Policies that read the natural treatment: expand over the distinct
  // per-row shift-value patterns. Within a cell every shift is a constant,
  // so the fitted chains never compose policies; each cell's outermost
  // representer weight is the cell indicator.
  const std::vector<Vec> patterns = shift_patterns(program, data);
  std::map<std::vector<double>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> key;
    key.reserve(patterns.size());
    for (const auto& p : patterns) key.push_back(p(static_cast<Eigen::Index>(i)));
    cells[key].push_back(i);
  }
  if (cells.size() > 25)
    throw ValidationError(
        "policies produce " + std::to_string(cells.size()) +
        " distinct shift patterns; natural/threshold policies need a discrete treatment "
        "(at most 25 patterns)");

  art.cells = cells.size();
  for (const auto& [pattern, rows] : cells) {
    RegressionProgram cell_program = program;
    std::size_t slot = 0;
    std::string cell_key = ";cell=";
    for (auto& step : cell_program.steps) {
      if (!step.consume_shift.set_treatment) continue;
      step.consume_shift.set_treatment = Policy::constant(pattern[slot]);
      cell_key += std::to_string(pattern[slot]) + ",";
      ++slot;
    }
    Vec indicator = Vec::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i : rows) indicator(static_cast<Eigen::Index>(i)) = 1.0;
    run_chain(cell_program, data, config, cache, indicator, cell_key, art);
  }
  art.plugin = art.terminal.mean();
  return art;
}

Vec eif_terms(const FitArtifacts& art) {
  const Eigen::Index n = art.outcome.size();
  const std::size_t k_steps = art.steps.size();
  if (k_steps == 0) return art.outcome;

  if (!art.corrections.empty() && art.terminal.size() == n) {
    Vec psi = Vec::Zero(n);
    for (const auto& corr : art.corrections) {
      if (corr.size() != n) throw LengthMismatchError("correction arrays disagree with outcome length");
      psi += corr;
    }
    psi += art.terminal;
    return psi;
  }

  // Artifacts assembled directly from per-step arrays (single chain).
  Vec psi = Vec::Zero(n);
  for (std::size_t k = 1; k <= k_steps; ++k) {
    const StepArtifacts& sa = art.steps[k - 1];
    if (sa.nu_obs.size() != n || sa.alpha_obs.size() != n)
      throw LengthMismatchError("artifact arrays disagree with outcome length");
    const Vec prev = k == 1 ? art.outcome : art.steps[k - 2].nu_shifted;
    psi += sa.alpha_obs.cwiseProduct(prev - sa.nu_obs);
  }
  psi += art.steps[k_steps - 1].nu_shifted;
  return psi;
}

Vec assemble_eif(const FitArtifacts& art, double theta) {
  return eif_terms(art).array() - theta;
}

EffectEstimate onestep(double plugin, const Vec& psi_uncentered) {
  if (!psi_uncentered.allFinite()) throw NonFiniteEstimateError("non-finite influence terms");
  EffectEstimate e;
  e.plugin = plugin;
  e.onestep = psi_uncentered.mean();
  e.eif = psi_uncentered.array() - e.onestep;
  const double sd = sample_sd(psi_uncentered);
  e.se = sd / std::sqrt(static_cast<double>(psi_uncentered.size()));
  if (e.se == 0.0) e.warnings.push_back("degenerate influence function; SE reported as 0");
  e.ci_lower = e.onestep - 1.96 * e.se;
  e.ci_upper = e.onestep + 1.96 * e.se;
  if (!std::isfinite(e.onestep) || !std::isfinite(e.se))
    throw NonFiniteEstimateError("non-finite estimate");
  return e;
}

EffectEstimate contrast(const std::string& name,
                        const std::vector<std::pair<const EffectEstimate*, int>>& parts) {
  if (parts.empty()) throw MissingFunctionalError("contrast " + name + " has no terms");
  for (const auto& [est, sign] : parts)
    if (est == nullptr) throw MissingFunctionalError("contrast " + name + " references a missing functional");
  EffectEstimate e;
  e.name = name;
  const Eigen::Index n = parts.front().first->eif.size();
  Vec eif = Vec::Zero(n);
  for (const auto& [est, sign] : parts) {
    if (est->eif.size() != n) throw LengthMismatchError("contrast components have different lengths");
    e.plugin += sign * est->plugin;
    e.onestep += sign * est->onestep;
    eif += static_cast<double>(sign) * est->eif;
  }
  e.eif = eif;
  const double sd = sample_sd(eif);
  e.se = sd / std::sqrt(static_cast<double>(n));
  if (e.se == 0.0) e.warnings.push_back("degenerate influence function; SE reported as 0");
  e.ci_lower = e.onestep - 1.96 * e.se;
  e.ci_upper = e.onestep + 1.96 * e.se;
  return e;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

FalsificationResult falsification_test(const EffectEstimate& remainder, double alpha) {
  if (remainder.se == 0.0) throw ZeroSeError("falsification test undefined with zero SE");
  FalsificationResult r;
  r.alpha = alpha;
  r.statistic = remainder.onestep / remainder.se;
  r.p_value = normal_two_sided_p(r.statistic);
  r.reject = r.p_value < alpha;
  r.conclusion = r.reject
                     ? "reject H0: R = 0; evidence of intermediate confounding by Z"
                     : "fail to reject H0: R = 0; no conclusion about intermediate confounding "
                       "can be made without other information";
  return r;
}

FamilyEstimate estimate_family(const ContrastTable& table, const AugmentedDataset& data,
                               const EngineConfig& config) {
  FamilyEstimate out;
  out.family = table.family;

  const auto folds = fold_partition(data);
  for (const auto& f : folds) out.fold_sizes.push_back(f.size());
  for (const auto& w : data.warnings) out.warnings.push_back(w);

  StepCache cache;
  std::vector<double> all_alpha;

  for (const FunctionalSpec& spec : table.functionals()) {
    const RegressionProgram program = build_program(spec, data.base.roles);
    FitArtifacts art = run_program(program, data, config, &cache);
    EffectEstimate est = onestep(art.plugin, eif_terms(art));
    est.name = spec.key();

    std::vector<double> losses;
    std::vector<std::string> picks;
    for (const auto& sa : art.steps) {
      for (double l : sa.riesz_loss) losses.push_back(l);
      out.alpha_clipped_total += sa.alpha_clipped;
      for (std::size_t f = 0; f < sa.learner_weights.size(); ++f) {
        std::ostringstream pick;
        pick << "fold" << f + 1 << ":";
        for (std::size_t j = 0; j < sa.learner_weights[f].size(); ++j) {
          if (j) pick << "+";
          pick << config.learners[j].name() << "*" << sa.learner_weights[f][j];
        }
        picks.push_back(pick.str());
      }
      for (Eigen::Index i = 0; i < sa.alpha_obs.size(); ++i) all_alpha.push_back(sa.alpha_obs(i));
    }
    out.riesz_losses[spec.key()] = std::move(losses);
    out.learner_picks[spec.key()] = std::move(picks);
    out.functionals.emplace(spec.key(), std::move(est));
  }

  for (const ContrastDef& def : table.effects) {
    std::vector<std::pair<const EffectEstimate*, int>> parts;
    parts.reserve(def.terms.size());
    for (const auto& [spec, sign] : def.terms) {
      auto it = out.functionals.find(spec.key());
      if (it == out.functionals.end())
        throw MissingFunctionalError("functional " + spec.key() + " was not estimated");
      parts.emplace_back(&it->second, sign);
    }
    EffectEstimate e = contrast(def.name, parts);
    for (const auto& w : e.warnings) out.warnings.push_back(def.name + ": " + w);
    out.effects.push_back(std::move(e));
  }

  if (table.has_remainder) {
    for (const auto& e : out.effects) {
      if (e.name == "R") {
        if (e.se > 0.0)
          out.falsification = falsification_test(e);
        else
          out.warnings.push_back("falsification test skipped: degenerate SE for R");
      }
    }
  }

  out.positivity = positivity_diagnostics(all_alpha, config.riesz.clip);
  if (out.positivity.flagged)
    out.warnings.push_back("positivity: more than 1% of representer weights at the clipping bound");
  return out;
}

}  // namespace mediator
