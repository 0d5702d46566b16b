#include <benchmark/benchmark.h>

#include "photonstat/counts.hpp"
#include "photonstat/simulator.hpp"

using namespace photonstat;

namespace {

ExperimentConfig pulse(EmissionMode mode, std::uint32_t runs) {
  ExperimentConfig c;
  c.run.n_runs = runs;
  c.source.duration_ns = c.run.duration_ns;
  c.source.profile = pulse_profile(50'000'000, 1'000'000, 23000.0, 300e6, c.run.duration_ns);
  c.emission.mode = mode;
  return c;
}

}  // namespace

static void BM_RunExperiment(benchmark::State& state) {
  const auto mode = static_cast<EmissionMode>(state.range(0));
  const auto c = pulse(mode, 4);
  std::size_t tags = 0;
  for (auto _ : state) {
    const auto d = sim::run_experiment(c, 1);
    tags = d.stream.size();
    benchmark::DoNotOptimize(tags);
  }
  state.SetLabel(to_string(mode));
  state.counters["runs_per_s"] = benchmark::Counter(4.0 * static_cast<double>(state.iterations()),
                                                    benchmark::Counter::kIsRate);
  state.counters["tags_per_run"] = static_cast<double>(tags) / 4.0;
}
BENCHMARK(BM_RunExperiment)
    ->Arg(static_cast<int>(EmissionMode::IdealPoisson))
    ->Arg(static_cast<int>(EmissionMode::Burst))
    ->Arg(static_cast<int>(EmissionMode::Mcwf))
    ->Unit(benchmark::kMillisecond);

static void BM_McwfNextGap(benchmark::State& state) {
  const sim::McwfSampler sampler(TwoLevelParams{}, 100'000.0);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.next_gap(rng));
}
BENCHMARK(BM_McwfNextGap);

static void BM_FanoBootstrap(benchmark::State& state) {
  const auto d = sim::run_experiment(pulse(EmissionMode::IdealPoisson, 100), 1);
  const auto bc = stats::bin_counts(d.stream, 200'000);
  const stats::BootstrapOptions opt{static_cast<unsigned>(state.range(0)), 1, 0.95, 1};
  for (auto _ : state) benchmark::DoNotOptimize(stats::fano_series(bc, opt).ratio_lo.data());
}
BENCHMARK(BM_FanoBootstrap)->Arg(50)->Unit(benchmark::kMillisecond);
