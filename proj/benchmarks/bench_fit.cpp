#include <vector>

#include <benchmark/benchmark.h>

#include "ucrcd/fixtures.hpp"
#include "ucrcd/io.hpp"
#include "ucrcd/kernels.hpp"
#include "ucrcd/solver.hpp"

using namespace ucrcd;

static void BM_FitBass(benchmark::State& state) {
  const BassParams b(100, 0.003, 0.4);
  std::vector<double> flows;
  double prev = 0;
  for (int k = 1; k <= 40; ++k) {
    const double z = bass_cumulative(b, k);
    flows.push_back(z - prev);
    prev = z;
  }
  const AnnualSeries series("x", 1980, flows);
  for (auto _ : state) benchmark::DoNotOptimize(fit(FitProblem::bass(series)));
}
BENCHMARK(BM_FitBass)->Unit(benchmark::kMillisecond);

static void BM_FitUcrcdRestricted(benchmark::State& state) {
  const auto fixtures = load_country_fixtures();
  const auto& f = find_fixture(fixtures, "Brazil");
  const auto truth = f.params.with(UcrcdParam::p2, 0.0);
  const auto data = synth_dataset(truth, f.c2, 55, 0.005, 1);
  const auto problem = FitProblem::ucrcd(data, true, {{"p2", 0.0}}, ObservationMode::instantaneous);
  for (auto _ : state) benchmark::DoNotOptimize(fit(problem));
}
BENCHMARK(BM_FitUcrcdRestricted)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK_MAIN();
