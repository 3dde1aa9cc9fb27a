#pragma once

// Shared fixtures for unit and acceptance tests: small SCMs, exact-count
// discrete datasets, and filesystem scratch helpers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mediator/dataset.hpp"
#include "mediator/oracle.hpp"

namespace testsupport {

inline std::filesystem::path scratch_dir(const std::string& label) {
  auto dir = std::filesystem::temp_directory_path() / ("mediator_test_" + label);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.close();
  return path.string();
}

// ---------------------------------------------------------------------------
// Exact-count discrete dataset: binary (W, A, M) with empirical frequencies
// equal to the population law, so hand-computed weights are exact.
//
//   P(W=1) = 0.5
//   P(A=1 | W=w) = 0.5                      (randomized)
//   P(M=1 | A=a, W=w) = 0.45 + 0.1 a + 0.03 w
//   E[Y | A, M, W] = 1 + 0.5 A + 0.8 M + 0.3 W   (Y generated with noise or
//                                                 taken at its mean)
// ---------------------------------------------------------------------------

struct DiscreteLaw {
  double pw = 0.5;
  double ga(double /*w*/) const { return 0.5; }                                // P(A=1|w)
  double pm(double a, double w) const { return 0.45 + 0.1 * a + 0.03 * w; }    // P(M=1|a,w)
  double q(double a, double m, double w) const { return 1.0 + 0.5 * a + 0.8 * m + 0.3 * w; }

  double cell_prob(int w, int a, int m) const {
    const double p_w = w ? pw : 1 - pw;
    const double p_a = a ? ga(w) : 1 - ga(w);
    const double p_m = m ? pm(a, w) : 1 - pm(a, w);
    return p_w * p_a * p_m;
  }

  // True psi^natural(a1, a2) by enumeration.
  double psi_natural(int a1, int a2) const {
    double v = 0.0;
    for (int w = 0; w <= 1; ++w) {
      const double p_w = w ? pw : 1 - pw;
      for (int m = 0; m <= 1; ++m) {
        const double p_m = m ? pm(a2, w) : 1 - pm(a2, w);
        v += p_w * p_m * q(a1, m, w);
      }
    }
    return v;
  }

  // True representer weights for the psi^natural(a1, a2) program.
  double alpha2(double a, double w, int a2) const { return (a == a2 ? 1.0 : 0.0) / (a2 ? ga(w) : 1 - ga(w)); }
  double alpha1(double a, double m, double w, int a1, int a2) const {
    if (a != a1) return 0.0;
    const double pm1 = m ? pm(a1, w) : 1 - pm(a1, w);
    const double pm2 = m ? pm(a2, w) : 1 - pm(a2, w);
    return pm2 / (pm1 * ((a1 ? ga(w) : 1 - ga(w))));
  }
};

/// Builds a dataset whose empirical cell frequencies equal the law exactly
/// (cell counts rounded from n * p, remainder assigned deterministically).
/// Y is set to its conditional mean so regressions are exact.
inline mediator::MediationDataset exact_discrete_dataset(const DiscreteLaw& law, std::size_t n) {
  std::vector<double> wc, ac, mc, yc;
  std::size_t assigned = 0;
  struct Cell { int w, a, m; double prob; };
  std::vector<Cell> cells;
  for (int w = 0; w <= 1; ++w)
    for (int a = 0; a <= 1; ++a)
      for (int m = 0; m <= 1; ++m) cells.push_back({w, a, m, law.cell_prob(w, a, m)});
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::size_t count = c + 1 == cells.size()
                            ? n - assigned
                            : static_cast<std::size_t>(cells[c].prob * static_cast<double>(n) + 0.5);
    assigned += count;
    for (std::size_t i = 0; i < count; ++i) {
      wc.push_back(cells[c].w);
      ac.push_back(cells[c].a);
      mc.push_back(cells[c].m);
      yc.push_back(law.q(cells[c].a, cells[c].m, cells[c].w));
    }
  }
  const auto rows = static_cast<Eigen::Index>(wc.size());
  mediator::Mat values(rows, 4);
  for (Eigen::Index i = 0; i < rows; ++i) {
    values(i, 0) = wc[static_cast<std::size_t>(i)];
    values(i, 1) = ac[static_cast<std::size_t>(i)];
    values(i, 2) = mc[static_cast<std::size_t>(i)];
    values(i, 3) = yc[static_cast<std::size_t>(i)];
  }
  mediator::VariableRoles roles;
  roles.covariates = {"w"};
  roles.treatment = "a";
  roles.mediators = {"m"};
  roles.outcome = "y";
  return mediator::make_dataset({"w", "a", "m", "y"}, std::move(values), roles);
}

// ---------------------------------------------------------------------------
// SCM builders
// ---------------------------------------------------------------------------

/// Bernoulli(p-expression) helper: step(p - u) with u ~ uniform(0,1).
inline mediator::ExprPtr bern_of(mediator::ExprPtr p) {
  return mediator::e_step(mediator::e_sub(std::move(p), mediator::e_noise()));
}

inline mediator::NoiseSpec unif01() {
  mediator::NoiseSpec ns;
  ns.dist = mediator::NoiseSpec::Dist::kUniform;
  ns.a = 0.0;
  ns.b = 1.0;
  return ns;
}

inline mediator::NoiseSpec gauss(double sd) {
  mediator::NoiseSpec ns;
  ns.dist = mediator::NoiseSpec::Dist::kNormal;
  ns.a = 0.0;
  ns.b = sd;
  return ns;
}

/// Linear-Gaussian SCM with intermediate confounding; Z is independent of W
/// given A, matching the permutation scheme.
///   w ~ N(0,1); a ~ Bern(0.5); z = 0.6a + N(0,0.5)
///   m = 0.4a + 0.5z + 0.3w + N(0,0.5)
///   y = 0.3a + 0.4z + 0.6m + 0.5w + N(0,0.5)
inline mediator::Scm linear_gaussian_scm() {
  using namespace mediator;
  Scm s;
  s.seed = 7;
  s.equations.push_back({"w", VarRole::kW, gauss(1.0), e_noise()});
  s.equations.push_back({"a", VarRole::kA, unif01(), bern_of(e_const(0.5))});
  s.equations.push_back({"z", VarRole::kZ, gauss(0.5), e_lin(0.0, {{0.6, "a"}})});
  s.equations.push_back({"m", VarRole::kM, gauss(0.5), e_lin(0.0, {{0.4, "a"}, {0.5, "z"}, {0.3, "w"}})});
  s.equations.push_back(
      {"y", VarRole::kY, gauss(0.5), e_lin(0.0, {{0.3, "a"}, {0.4, "z"}, {0.6, "m"}, {0.5, "w"}})});
  s.compile();
  return s;
}

/// No A -> Z edge (falsification null): Z is exogenous noise; Y keeps a
/// Z x M interaction so the null is not vacuous.
inline mediator::Scm no_intermediate_confounding_scm() {
  using namespace mediator;
  Scm s;
  s.seed = 11;
  s.equations.push_back({"w", VarRole::kW, gauss(1.0), e_noise()});
  s.equations.push_back({"a", VarRole::kA, unif01(), bern_of(e_const(0.5))});
  s.equations.push_back({"z", VarRole::kZ, unif01(), bern_of(e_const(0.4))});
  s.equations.push_back(
      {"m", VarRole::kM, unif01(),
       bern_of(e_sigmoid(e_lin(-0.8, {{0.4, "a"}, {1.9, "z"}, {0.2, "w"}}, false)))});
  Equation y;
  y.name = "y";
  y.role = VarRole::kY;
  y.noise = gauss(0.5);
  y.expr = e_add({e_lin(0.0, {{0.2, "a"}, {0.3, "z"}, {0.4, "m"}, {0.3, "w"}}, true),
                  e_mul({e_const(2.6), e_var("z"), e_var("m")})});
  s.equations.push_back(std::move(y));
  s.compile();
  return s;
}

/// Strong intermediate confounding with arm-dependent Z variance and a
/// Z x M interaction in Y, so the remainder R is far from zero.
inline mediator::Scm confounded_scm() {
  using namespace mediator;
  Scm s;
  s.seed = 13;
  s.equations.push_back({"w", VarRole::kW, gauss(1.0), e_noise()});
  s.equations.push_back({"a", VarRole::kA, unif01(), bern_of(e_const(0.5))});
  s.equations.push_back(
      {"z", VarRole::kZ, unif01(), bern_of(e_lin(0.10, {{0.45, "a"}}, false))});
  s.equations.push_back(
      {"m", VarRole::kM, unif01(),
       bern_of(e_sigmoid(e_lin(-0.8, {{0.4, "a"}, {1.9, "z"}, {0.2, "w"}}, false)))});
  Equation y;
  y.name = "y";
  y.role = VarRole::kY;
  y.noise = gauss(0.5);
  y.expr = e_add({e_lin(0.0, {{0.2, "a"}, {0.3, "z"}, {0.4, "m"}, {0.3, "w"}}, true),
                  e_mul({e_const(2.6), e_var("z"), e_var("m")})});
  s.equations.push_back(std::move(y));
  s.compile();
  return s;
}

/// No M -> Y and no Z -> Y dependence: mechanistic nulls for P3, P4, NIE.
inline mediator::Scm no_mediation_scm() {
  using namespace mediator;
  Scm s;
  s.seed = 17;
  s.equations.push_back({"w", VarRole::kW, gauss(1.0), e_noise()});
  s.equations.push_back({"a", VarRole::kA, unif01(), bern_of(e_const(0.5))});
  s.equations.push_back({"z", VarRole::kZ, gauss(0.5), e_lin(0.0, {{0.5, "a"}})});
  s.equations.push_back({"m", VarRole::kM, gauss(0.5), e_lin(0.0, {{0.4, "a"}, {0.5, "z"}, {0.3, "w"}})});
  s.equations.push_back({"y", VarRole::kY, gauss(0.5), e_lin(0.0, {{0.4, "a"}, {0.3, "w"}})});
  s.compile();
  return s;
}

/// Z-free linear SCM for the natural-effect family.
inline mediator::Scm simple_natural_scm() {
  using namespace mediator;
  Scm s;
  s.seed = 19;
  s.equations.push_back({"w", VarRole::kW, gauss(1.0), e_noise()});
  s.equations.push_back({"a", VarRole::kA, unif01(), bern_of(e_const(0.5))});
  s.equations.push_back({"m", VarRole::kM, gauss(0.5), e_lin(0.0, {{0.7, "a"}, {0.3, "w"}})});
  s.equations.push_back({"y", VarRole::kY, gauss(0.5), e_lin(0.0, {{0.4, "a"}, {0.6, "m"}, {0.5, "w"}})});
  s.compile();
  return s;
}

inline mediator::AugmentedDataset prepared(const mediator::MediationDataset& data, int folds,
                                           std::uint64_t seed) {
  auto aug = mediator::augment_zpi(data, seed);
  return mediator::make_folds(std::move(aug), folds, seed);
}

}  // namespace testsupport
