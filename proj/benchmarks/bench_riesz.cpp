#include <benchmark/benchmark.h>

#include "mediator/riesz.hpp"
#include "mediator/rng.hpp"

namespace {

using namespace mediator;

struct Setup {
  Mat x_obs;
  Mat x_shift;
  Vec w;
};

Setup make_setup(int n) {
  Rng rng(11);
  Setup s;
  s.x_obs.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const double a = rng.bernoulli(0.5) ? 1.0 : 0.0;
    s.x_obs(i, 0) = a;
    s.x_obs(i, 1) = a + rng.normal();
    s.x_obs(i, 2) = rng.normal();
    s.x_obs(i, 3) = rng.normal();
  }
  s.x_shift = s.x_obs;
  s.x_shift.col(0).setOnes();
  s.w = Vec::Ones(n);
  return s;
}

void BM_RieszLinearDegree2(benchmark::State& state) {
  const auto s = make_setup(static_cast<int>(state.range(0)));
  RieszBasisSpec spec;
  spec.degree = 2;
  for (auto _ : state) {
    auto fit = fit_riesz_linear(s.x_obs, s.x_shift, s.w, spec, 0);
    benchmark::DoNotOptimize(fit);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RieszLinearDegree2)->Range(512, 16384)->Complexity();

void BM_RieszFeedforward(benchmark::State& state) {
  const auto s = make_setup(2000);
  FeedforwardSpec spec;
  spec.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto fit = fit_riesz_ff(s.x_obs, s.x_shift, s.w, spec, 50.0, 3);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(BM_RieszFeedforward)->Arg(5)->Arg(20);

}  // namespace
