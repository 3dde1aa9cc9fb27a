#include <benchmark/benchmark.h>

#include "mediator/learners.hpp"
#include "mediator/rng.hpp"

namespace {

using namespace mediator;

struct Problem {
  Mat x;
  Vec y;
};

Problem make_problem(int n, int p) {
  Rng rng(42);
  Problem pr;
  pr.x.resize(n, p);
  pr.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < p; ++j) {
      pr.x(i, j) = rng.normal();
      s += (j % 2 ? 0.5 : -0.25) * pr.x(i, j);
    }
    pr.y(i) = s + 0.5 * rng.normal();
  }
  return pr;
}

void BM_FitLinear(benchmark::State& state) {
  const auto pr = make_problem(static_cast<int>(state.range(0)), 8);
  const auto spec = LearnerSpec::from_name("linear");
  for (auto _ : state) {
    auto fit = fit_learner(spec, TargetType::kContinuous, pr.x, pr.y, 1);
    benchmark::DoNotOptimize(fit);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitLinear)->Range(256, 8192)->Complexity();

void BM_FitBoost(benchmark::State& state) {
  const auto pr = make_problem(static_cast<int>(state.range(0)), 8);
  auto spec = LearnerSpec::from_name("boost");
  spec.boost_trees = 50;
  for (auto _ : state) {
    auto fit = fit_learner(spec, TargetType::kContinuous, pr.x, pr.y, 1);
    benchmark::DoNotOptimize(fit);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitBoost)->Range(256, 4096)->Complexity();

void BM_FitEnsembleConvex(benchmark::State& state) {
  const auto pr = make_problem(static_cast<int>(state.range(0)), 8);
  EnsembleSpec spec;
  spec.candidates = {LearnerSpec::from_name("mean"), LearnerSpec::from_name("linear"),
                     LearnerSpec::from_name("ridge")};
  spec.cv_folds = 5;
  for (auto _ : state) {
    auto fit = fit_ensemble(spec, pr.x, pr.y, 7);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(BM_FitEnsembleConvex)->Range(512, 4096);

}  // namespace
