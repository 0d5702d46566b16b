#include <cmath>
#include <random>

#include "doctest.h"
#include "photonstat/tia.hpp"
#include "random_streams.hpp"

using namespace photonstat;
using namespace photonstat::stats;
using doctest::Approx;

namespace {

// Bursts starting at rate r_slow; inside each burst, detections at rate
// r_fast over a fixed window. Poisson background on top.
TimeTagStream bursts(std::uint64_t seed, std::uint32_t runs, std::uint64_t duration_ns, double r_slow,
                     double r_fast, double window_ns, double background_cps) {
  std::mt19937_64 rng(seed);
  std::vector<TimeTag> tags;
  const double T = static_cast<double>(duration_ns);
  for (std::uint32_t r = 0; r < runs; ++r) {
    std::exponential_distribution<double> slow(r_slow * 1e-9), fast(r_fast * 1e-9), bg(background_cps * 1e-9);
    for (double t = slow(rng); t < T; t += slow(rng)) {
      for (double e = t + fast(rng); e < t + window_ns && e < T; e += fast(rng)) {
        tags.push_back({r, 0, static_cast<std::uint64_t>(e)});
      }
    }
    if (background_cps > 0) {
      for (double t = bg(rng); t < T; t += bg(rng)) tags.push_back({r, 0, static_cast<std::uint64_t>(t)});
    }
  }
  sort_tags(tags);
  return {{1, duration_ns, runs, 1}, std::move(tags)};
}

}  // namespace

TEST_CASE("single Poisson stream falls back to one component at its rate") {
  const auto s = testutil::poisson_stream(2, 20, 1, 100'000'000, 5e4);
  const auto fit = tia(s, 1000, {0, 100'000'000});
  CHECK(fit.single_component);
  CHECK_FALSE(fit.fallback_reason.empty());
  REQUIRE(fit.components.size() == 1);
  CHECK(fit.slow().rate_hz == Approx(5e4).epsilon(0.03));
  CHECK(fit.normalization == Approx(1.0).epsilon(0.03));
  std::uint64_t total = 0;
  for (const auto& b : fit.histogram) {
    CHECK(b.count >= 10);
    total += b.count;
  }
  CHECK(total == fit.n_intervals);
}

TEST_CASE("bursts: two components, ordered fast to slow, slow slope tracks bursts") {
  const auto s = bursts(5, 30, 1'000'000'000, 2000.0, 1e6, 12000.0, 0.0);
  const auto fit = tia(s, 100, {0, 1'000'000'000});
  REQUIRE_FALSE(fit.single_component);
  REQUIRE(fit.components.size() == 2);
  CHECK(fit.fast().rate_hz > fit.slow().rate_hz);
  CHECK(fit.fast().rate_hz == Approx(1e6).epsilon(0.15));
  CHECK(fit.atom_rate_hz == Approx(2000.0).epsilon(0.1));
  CHECK(fit.normalization == Approx(1.0).epsilon(0.05));
  CHECK(fit.cluster_gap_k > 0.0);
  CHECK(std::abs(fit.slow().rate_hz - fit.cluster_rate_hz) <
        2.0 * std::hypot(fit.slow().rate_se_hz, fit.cluster_rate_se_hz) + 0.02 * fit.cluster_rate_hz);
  double sum_p = 0.0;
  for (const auto& b : fit.histogram) sum_p += b.probability * static_cast<double>(b.k_end - b.k_begin);
  CHECK(sum_p == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("background rate is removed from the slow component") {
  const auto s = bursts(6, 20, 1'000'000'000, 1000.0, 1e6, 12000.0, 500.0);
  TiaOptions opt;
  opt.background_rate_hz = 500.0;
  const auto fit = tia(s, 100, {0, 1'000'000'000}, opt);
  REQUIRE(fit.components.size() == 2);
  CHECK(fit.atom_rate_hz == Approx(fit.slow().rate_hz - 500.0));
  CHECK(fit.atom_rate_hz == Approx(1000.0).epsilon(0.15));
}

TEST_CASE("range restricts the gaps and too few gaps throw") {
  const auto s = testutil::poisson_stream(9, 2, 1, 10'000'000, 1e5);
  const auto all = tia(s, 100, {0, 10'000'000});
  const auto half = tia(s, 100, {0, 5'000'000});
  CHECK(half.n_intervals < all.n_intervals);
  CHECK_THROWS_AS(tia(s, 100, {0, 100'000}), std::invalid_argument);
  CHECK_THROWS_AS(tia(s, 0, {0, 10'000'000}), std::invalid_argument);
}
