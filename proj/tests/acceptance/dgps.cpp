#include "acceptance/dgps.hpp"

#include "mediator/rng.hpp"

namespace acceptance {

using namespace mediator;

namespace {

// Uniform integer levels 1..k from cut points on a uniform(0,1) noise.
ExprPtr levels_from_uniform(const std::vector<double>& cuts) {
  std::vector<ExprPtr> terms;
  terms.push_back(e_const(1.0));
  for (double c : cuts) terms.push_back(e_step(e_sub(e_noise(), e_const(c))));
  return e_add(std::move(terms));
}

}  // namespace

// Structural constants are calibrated so that both case-study analyses land
// near the reference magnitudes; see the acceptance suite for the targets.
Scm jobs_scm() {
  Scm s;
  s.seed = 20250808;

  // Baseline covariates.
  s.equations.push_back({"econ_hard", VarRole::kW, testsupport::unif01(),
                         e_add({e_const(1.0), e_mul({e_const(4.0), e_noise()})})});
  s.equations.push_back({"depress1", VarRole::kW, testsupport::gauss(0.45), e_add({e_const(1.9), e_noise()})});
  s.equations.push_back({"sex", VarRole::kW, testsupport::unif01(),
                         testsupport::bern_of(e_const(0.45))});
  s.equations.push_back({"age", VarRole::kW, testsupport::gauss(10.0), e_add({e_const(37.0), e_noise()})});
  s.equations.push_back({"occp", VarRole::kW, testsupport::unif01(),
                         levels_from_uniform({1.0 / 7, 2.0 / 7, 3.0 / 7, 4.0 / 7, 5.0 / 7, 6.0 / 7})});
  s.equations.push_back({"marital", VarRole::kW, testsupport::unif01(),
                         levels_from_uniform({0.2, 0.4, 0.6, 0.8})});
  s.equations.push_back({"nonwhite", VarRole::kW, testsupport::unif01(),
                         testsupport::bern_of(e_const(0.2))});
  s.equations.push_back({"educ", VarRole::kW, testsupport::unif01(),
                         levels_from_uniform({0.2, 0.4, 0.6, 0.8})});
  s.equations.push_back({"income", VarRole::kW, testsupport::unif01(),
                         levels_from_uniform({0.15, 0.35, 0.65, 0.85})});

  // Randomized assignment (2:1), partial two-sided compliance rising with
  // income, mediator and outcome linear in their parents.
  s.equations.push_back({"treat", VarRole::kA, testsupport::unif01(),
                         testsupport::bern_of(e_const(2.0 / 3.0))});

  // P(comply = 1 | treat, income) = sigmoid(-2.0 + 2.2 treat + 1.2 (income - 3))
  s.equations.push_back(
      {"comply", VarRole::kZ, testsupport::unif01(),
       testsupport::bern_of(e_sigmoid(e_add({e_const(-2.0),
                                             e_mul({e_const(2.2), e_var("treat")}),
                                             e_mul({e_const(1.2), e_var("income")}),
                                             e_const(-3.6)})))});

  // job_seek = 3.45 + 0.21 treat + 0.50 comply + 0.37 (income - 3)
  //            - 0.15 (depress1 - 1.9) + noise
  s.equations.push_back(
      {"job_seek", VarRole::kM, testsupport::gauss(0.45),
       e_add({e_const(3.45), e_mul({e_const(0.21), e_var("treat")}),
              e_mul({e_const(0.50), e_var("comply")}),
              e_mul({e_const(0.37), e_add({e_var("income"), e_const(-3.0)})}),
              e_mul({e_const(-0.15), e_add({e_var("depress1"), e_const(-1.9)})}), e_noise()})});

  // depress2 = 1.75 - 0.016 treat - 0.030 comply - 0.050 (job_seek - 3.6)
  //            - 0.020 (income - 3) + 0.42 (depress1 - 1.9) + 0.02 (econ_hard - 3)
  s.equations.push_back(
      {"depress2", VarRole::kY, testsupport::gauss(0.12),
       e_add({e_const(1.75), e_mul({e_const(-0.016), e_var("treat")}),
              e_mul({e_const(-0.030), e_var("comply")}),
              e_mul({e_const(-0.050), e_add({e_var("job_seek"), e_const(-3.6)})}),
              e_mul({e_const(-0.020), e_add({e_var("income"), e_const(-3.0)})}),
              e_mul({e_const(0.42), e_add({e_var("depress1"), e_const(-1.9)})}),
              e_mul({e_const(0.02), e_add({e_var("econ_hard"), e_const(-3.0)})}), e_noise()})});

  s.compile();
  return s;
}

MediationDataset sampled_discrete_dataset(const testsupport::DiscreteLaw& law, std::size_t n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  Mat values(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.bernoulli(law.pw) ? 1.0 : 0.0;
    const double a = rng.bernoulli(law.ga(w)) ? 1.0 : 0.0;
    const double m = rng.bernoulli(law.pm(a, w)) ? 1.0 : 0.0;
    const double y = law.q(a, m, w) + 0.5 * rng.normal();
    values(static_cast<Eigen::Index>(i), 0) = w;
    values(static_cast<Eigen::Index>(i), 1) = a;
    values(static_cast<Eigen::Index>(i), 2) = m;
    values(static_cast<Eigen::Index>(i), 3) = y;
  }
  VariableRoles roles;
  roles.covariates = {"w"};
  roles.treatment = "a";
  roles.mediators = {"m"};
  roles.outcome = "y";
  return make_dataset({"w", "a", "m", "y"}, std::move(values), roles);
}

}  // namespace acceptance
