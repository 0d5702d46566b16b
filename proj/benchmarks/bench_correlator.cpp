#include <benchmark/benchmark.h>

#include <random>

#include "photonstat/correlator.hpp"
#include "photonstat/g2.hpp"
#include "photonstat/io.hpp"

using namespace photonstat;

namespace {

// One run of uniform tags on a single channel.
TimeTagStream uniform(std::uint64_t seed, std::size_t n, std::uint64_t duration) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> when(0, duration - 1);
  std::vector<TimeTag> tags(n);
  for (auto& t : tags) t = {0, 0, when(rng)};
  sort_tags(tags);
  return {{1, duration, 1, 1}, std::move(tags)};
}

}  // namespace

// Total tags split evenly over the two inputs; density fixed at 5e6 per second per input.
static void BM_CrossCorrelate(benchmark::State& state) {
  const auto total = static_cast<std::size_t>(state.range(0));
  const std::uint64_t max_lag = static_cast<std::uint64_t>(state.range(1));
  const std::uint64_t duration = total / 2 * 200;
  const auto a = uniform(1, total / 2, duration);
  const auto b = uniform(2, total / 2, duration);
  std::size_t hist_bytes = 0;
  for (auto _ : state) {
    auto raw = corr::cross_correlate(a, b, 4, max_lag);
    hist_bytes = raw.counts.size() * sizeof(std::uint64_t);
    benchmark::DoNotOptimize(raw.counts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(total));
  state.counters["histogram_bytes"] = static_cast<double>(hist_bytes);
  state.counters["stream_bytes"] = static_cast<double>(total * sizeof(TimeTag));
}
BENCHMARK(BM_CrossCorrelate)
    ->Args({100'000, 10'000})
    ->Args({1'000'000, 10'000})
    ->Args({10'000'000, 10'000})
    ->Args({10'000'000, 1'000})
    ->Unit(benchmark::kMillisecond);

static void BM_Coincidences(benchmark::State& state) {
  const auto a = uniform(3, 1'000'000, 200'000'000);
  const auto b = uniform(4, 1'000'000, 200'000'000);
  for (auto _ : state) benchmark::DoNotOptimize(corr::coincidences(a, b, 20, {0, 200'000'000}));
  state.SetItemsProcessed(state.iterations() * 2'000'000);
}
BENCHMARK(BM_Coincidences)->Unit(benchmark::kMillisecond);

static void BM_G2NormalizeLocal(benchmark::State& state) {
  const auto a = uniform(5, 1'000'000, 200'000'000);
  const auto b = uniform(6, 1'000'000, 200'000'000);
  const auto raw = corr::cross_correlate(a, b, 4, 3000);
  const stats::G2Options opt{stats::G2Norm::LocalRate, 0, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(stats::g2_normalize(raw, a, b, opt).g2.data());
}
BENCHMARK(BM_G2NormalizeLocal)->Unit(benchmark::kMillisecond);

static void BM_TtagRoundTrip(benchmark::State& state) {
  const auto s = uniform(7, static_cast<std::size_t>(state.range(0)), 1'000'000'000);
  for (auto _ : state) {
    const auto bytes = io::encode_ttag(s);
    benchmark::DoNotOptimize(io::decode_ttag(bytes).stream.size());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0) * static_cast<std::int64_t>(io::kTtagRecordBytes));
}
BENCHMARK(BM_TtagRoundTrip)->Arg(1'000'000)->Unit(benchmark::kMillisecond);
