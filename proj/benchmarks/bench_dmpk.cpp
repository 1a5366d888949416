#include <benchmark/benchmark.h>

#include "dmpk/analysis.hpp"
#include "dmpk/noise.hpp"
#include "dmpk/rng.hpp"
#include "dmpk/sde.hpp"
#include "dmpk/transfer.hpp"

using namespace dmpk;

static void BM_Philox(benchmark::State& state) {
  PhiloxCounter ctr{0, 0, 0, 0};
  for (auto _ : state) {
    ++ctr[0];
    benchmark::DoNotOptimize(philox4x32_10(ctr, {1, 2}));
  }
}
BENCHMARK(BM_Philox);

static void BM_DmpkEvaluate(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const SymmetryClass cls(2, n);
  const DmpkModel model(cls);
  const auto T = degenerate_start(cls, 100 * n).T;
  std::vector<double> v(T.size()), d(T.size());
  for (auto _ : state) {
    model.evaluate(T, v, d);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_DmpkEvaluate)->Arg(4)->Arg(32);

static void BM_BrownianCursor(benchmark::State& state) {
  BrownianCursor cursor(BrownianPath(NoiseStream(1, 0), 32));
  std::vector<double> out(32);
  const std::uint64_t step = std::uint64_t{1} << (BrownianPath::kResolution - 10);
  std::uint64_t pos = 0;
  for (auto _ : state) {
    pos = (pos + step) & ((std::uint64_t{1} << BrownianPath::kResolution) - 1);
    cursor.value(0, 1e-3, pos, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_BrownianCursor);

static void BM_SdePath(benchmark::State& state) {
  const SymmetryClass cls(2, static_cast<int>(state.range(0)));
  SolverConfig config;
  config.eta_gap = 0.5;
  const TransmissionState start{0.0, std::vector<double>(cls.size(), 1.0)};
  std::uint64_t p = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_path(start, 1.0, cls, config, p++));
}
BENCHMARK(BM_SdePath)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_MatrixPath(benchmark::State& state) {
  const SymmetryClass cls(2, static_cast<int>(state.range(0)));
  SolverConfig config;
  std::uint64_t p = 0;
  for (auto _ : state) benchmark::DoNotOptimize(evolve_transfer(0.5, cls, config, p++));
}
BENCHMARK(BM_MatrixPath)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_TransmissionSpectrum(benchmark::State& state) {
  const SymmetryClass cls(2, static_cast<int>(state.range(0)));
  const auto m = evolve_transfer(1.0, cls, SolverConfig{}, 0).records.back();
  for (auto _ : state) benchmark::DoNotOptimize(transmission_spectrum(m));
}
BENCHMARK(BM_TransmissionSpectrum)->Arg(4)->Arg(32);
BENCHMARK_MAIN();
