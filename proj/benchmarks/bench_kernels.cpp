#include <vector>

#include <benchmark/benchmark.h>

#include "ucrcd/fixtures.hpp"
#include "ucrcd/kernels.hpp"
#include "ucrcd/selection.hpp"

using namespace ucrcd;

static void BM_BassClosedForm(benchmark::State& state) {
  const BassParams b(100, 0.003, 0.4);
  double t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bass_cumulative(b, t));
    t = t > 100 ? 0 : t + 0.1;
  }
}
BENCHMARK(BM_BassClosedForm);

static void BM_BassIntegrated(benchmark::State& state) {
  const BassParams b(100, 0.003, 0.4);
  std::vector<double> times;
  for (int i = 0; i <= 1000; ++i) times.push_back(0.1 * i);
  for (auto _ : state) benchmark::DoNotOptimize(bass_cumulative_integrated(b, times));
}
BENCHMARK(BM_BassIntegrated);

static void BM_UcrcdSimulate(benchmark::State& state) {
  const auto fixtures = load_country_fixtures();
  const auto& f = find_fixture(fixtures, "Brazil");
  const IntegratorConfig config{static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(ucrcd_simulate(f.params, f.c2, 55, config));
}
BENCHMARK(BM_UcrcdSimulate)->Arg(16)->Arg(64)->Arg(256);

static void BM_FRatio(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(compare_nested(0.998, 0.999, 85, 9, 1, 0.05));
  }
}
BENCHMARK(BM_FRatio);
