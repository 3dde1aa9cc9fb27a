#include <benchmark/benchmark.h>

#include "mediator/engine.hpp"
#include "mediator/oracle.hpp"
#include "support/helpers.hpp"

namespace {

using namespace mediator;

void BM_RecantingTwinFamily(benchmark::State& state) {
  const auto scm = testsupport::linear_gaussian_scm();
  const auto data = simulate(scm, static_cast<std::size_t>(state.range(0)), 5);
  const auto aug = testsupport::prepared(data, 2, 5);
  const auto table =
      effects_to_contrasts(EffectFamilyCode::kRecantingTwin, PolicyPair{}, data.roles);
  EngineConfig cfg;
  cfg.learners = {LearnerSpec::from_name("linear"), LearnerSpec::from_name("ridge")};
  cfg.learner_cv_folds = 2;
  cfg.riesz.basis.degree = 2;
  for (auto _ : state) {
    auto fam = estimate_family(table, aug, cfg);
    benchmark::DoNotOptimize(fam);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RecantingTwinFamily)->Arg(500)->Arg(1000)->Arg(2000)->Complexity();

void BM_TruthTable(benchmark::State& state) {
  const auto scm = testsupport::linear_gaussian_scm();
  for (auto _ : state) {
    auto t = truth_table(scm, EffectFamilyCode::kRecantingTwin, PolicyPair{},
                         static_cast<std::size_t>(state.range(0)), 1);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_TruthTable)->Arg(10000)->Arg(100000);

}  // namespace
