#include <cmath>
#include <random>

#include "doctest.h"
#include "photonstat/correlator.hpp"
#include "photonstat/g2.hpp"
#include "photonstat/theory.hpp"
#include "random_streams.hpp"

using namespace photonstat;
using namespace photonstat::stats;
using doctest::Approx;

namespace {

double covered_fraction(const G2Histogram& h) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < h.g2.size(); ++j) {
    if (std::abs(h.g2[j] - 1.0) <= 1.96 * h.sigma[j]) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(h.g2.size());
}

G2Histogram normalized(const TimeTagStream& s, G2Norm mode, std::uint64_t bin = 5, std::uint64_t max_lag = 500) {
  const auto a = s.channel(0), b = s.channel(1);
  const auto raw = corr::cross_correlate(a, b, bin, max_lag);
  return g2_normalize(raw, a, b, {mode, 0, 0.25});
}

// Single emitter that never emits twice within `gap_ns`, split 50/50 onto two
// channels, plus independent Poisson background on each channel.
TimeTagStream antibunched(std::uint64_t seed, std::uint32_t runs, std::uint64_t duration_ns, double gap_ns,
                          double mean_extra_ns, double bg_per_channel) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> extra(1.0 / mean_extra_ns), bg(bg_per_channel * 1e-9);
  std::bernoulli_distribution coin(0.5);
  std::vector<TimeTag> tags;
  const double T = static_cast<double>(duration_ns);
  for (std::uint32_t r = 0; r < runs; ++r) {
    for (double t = extra(rng); t < T; t += gap_ns + extra(rng)) {
      tags.push_back({r, static_cast<std::uint8_t>(coin(rng)), static_cast<std::uint64_t>(t)});
    }
    for (std::uint8_t c = 0; c < 2; ++c) {
      for (double t = bg(rng); t < T; t += bg(rng)) tags.push_back({r, c, static_cast<std::uint64_t>(t)});
    }
  }
  sort_tags(tags);
  return {{1, duration_ns, runs, 2}, std::move(tags)};
}

}  // namespace

TEST_CASE("independent Poisson streams: g2 near 1 in every normalization") {
  const auto s = testutil::poisson_stream(31, 20, 2, 20'000'000, 3e5);
  for (G2Norm mode : {G2Norm::Stationary, G2Norm::LocalRate, G2Norm::Envelope}) {
    INFO(to_string(mode));
    const auto h = normalized(s, mode);
    CHECK(covered_fraction(h) >= 0.9);
    CHECK(h.mode == mode);
    double mean = 0.0;
    for (double g : h.g2) mean += g;
    CHECK(mean / h.g2.size() == Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("accidental always holds the stationary reference") {
  const auto s = testutil::poisson_stream(32, 4, 2, 5'000'000, 3e5);
  const auto st = normalized(s, G2Norm::Stationary);
  const auto env = normalized(s, G2Norm::Envelope);
  CHECK(env.accidental == st.norm);
  CHECK(st.accidental == st.norm);
  // Edge correction: the reference falls off linearly in |tau|.
  CHECK(st.norm.front() < st.norm[st.raw.zero_bin()]);
}

TEST_CASE("doubling both rates leaves g2 unchanged within errors") {
  // Thinning scales both rates by the same factor and keeps g2; compare the
  // full stream against a 50% thinned copy.
  const auto full = antibunched(40, 20, 20'000'000, 200.0, 300.0, 5e4);
  std::mt19937_64 rng(3);
  std::vector<TimeTag> kept;
  for (const auto& t : full.tags()) {
    if (rng() % 2) kept.push_back(t);
  }
  const TimeTagStream half(full.header(), kept);
  const auto a = normalized(full, G2Norm::Stationary, 25, 1000);
  const auto b = normalized(half, G2Norm::Stationary, 25, 1000);
  for (double width : {12.0, 100.0, 1000.0}) {
    const auto wa = g2_window(a, width);
    const auto wb = g2_window(b, width);
    CHECK(std::abs(wa.g2 - wb.g2) < 3.0 * std::hypot(wa.sigma, wb.sigma));
  }

  const auto p1 = testutil::poisson_stream(42, 10, 2, 10'000'000, 2e5);
  const auto p2 = testutil::poisson_stream(43, 10, 2, 10'000'000, 4e5);
  const auto g1 = g2_window(normalized(p1, G2Norm::Stationary), 500.0);
  const auto g2 = g2_window(normalized(p2, G2Norm::Stationary), 500.0);
  CHECK(std::abs(g1.g2 - g2.g2) < 3.0 * std::hypot(g1.sigma, g2.sigma));
}

TEST_CASE("zero reference is an error") {
  const TimeTagStream empty({1, 1000, 1, 2}, {});
  const auto a = empty.channel(0), b = empty.channel(1);
  const auto raw = corr::cross_correlate(a, b, 5, 100);
  CHECK_THROWS_AS(g2_normalize(raw, a, b), std::invalid_argument);
}

TEST_CASE("background correction formula") {
  const auto id = g2_background_correct(0.3, 1000.0, 0.0, 0.02);
  CHECK(id.value == Approx(0.3));
  CHECK(id.sigma == Approx(0.02));
  const double S = 3500, B = 500, I = S + B;
  const double pure = (2 * S * B + B * B) / (I * I);  // g2 of a perfect emitter plus background
  CHECK(g2_background_correct(pure, S, B).value == Approx(0.0).epsilon(1e-12));
  const auto bad = g2_background_correct(0.0, S, B, 0.01);
  CHECK(bad.inconsistent);
  CHECK_THROWS_AS(g2_background_correct(0.1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(g2_background_correct(0.1, 1.0, -1.0), std::invalid_argument);

  const auto f = background_frame(100.0, 36.0);
  CHECK(f.signal == Approx(8.0));
  CHECK(f.background == Approx(2.0));
  CHECK((f.signal + f.background) * (f.signal + f.background) == Approx(100.0));
}

TEST_CASE("known emitter plus background: corrected g2(0) covers zero") {
  const double bg = 1e5;
  const auto s = antibunched(50, 40, 20'000'000, 300.0, 700.0, bg);
  const auto h = normalized(s, G2Norm::Stationary, 5, 1000);
  const auto w = g2_window(h, 2.0);
  const double S = 1e9 / 1000.0;  // emitter rate, both channels
  const auto c = g2_background_correct(w.g2, S, 2 * bg, w.sigma);
  CHECK(std::abs(c.value) < 2.5 * c.sigma);
  CHECK_FALSE(c.inconsistent);
}

TEST_CASE("expected histogram follows the two-level curve") {
  corr::RawCorrelation raw;
  raw.lag_bin_ns = 5;  // odd: bins +-k cover mirrored integer lags
  raw.max_lag_ns = 500;
  raw.counts.assign(201, 0);
  TwoLevelParams p;
  const auto e = g2_expected(raw, p);
  REQUIRE(e.size() == 201);
  CHECK(e[100] < 0.05);
  CHECK(e[100] > 0.0);
  CHECK(e.front() == Approx(1.0).epsilon(0.02));
  for (std::size_t j = 0; j < 100; ++j) CHECK(e[j] == Approx(e[200 - j]).epsilon(1e-9));
}

TEST_CASE("g2(0) series: tiling, usability, consistency with the coincidence counter") {
  const auto s = testutil::poisson_stream(60, 10, 2, 100'000'000, 2e4);
  const auto a = s.channel(0), b = s.channel(1);
  G2ZeroOptions opt;
  opt.dwell_ns = 12000;
  opt.background_rate_cps = 0.0;
  const auto z = g2_zero_series(a, b, 10.0, 20, 1.08, opt);
  REQUIRE(z.windows.size() == 10);
  for (std::size_t w = 0; w < z.windows.size(); ++w) {
    CHECK(z.windows[w].begin_ns == w * 10'000'000);
    CHECK(z.windows[w].length() == 10'000'000);
    CHECK(z.coincidences[w] == corr::coincidences(a, b, 20, z.windows[w]));
    CHECK(z.usable[w]);
    CHECK(z.overlay[w] == Approx(theory::g2_zero_vs_flux(1.08, z.mean_atoms[w])));
  }
  double C = 0.0, N = 0.0;
  for (std::size_t w = 0; w < z.windows.size(); ++w) {
    C += z.coincidences[w];
    N += z.norm[w];
  }
  CHECK(std::abs(C / N - 1.0) < 3.0 * std::sqrt(C) / N);
  CHECK(z.bandwidth_ns == 100);

  opt.background_rate_cps = 1e9;
  const auto none = g2_zero_series(a, b, 10.0, 20, 1.08, opt);
  for (double o : none.overlay) CHECK(o == 0.0);

  CHECK_THROWS_AS(g2_zero_series(a, b, 3.0, 20, 1.08), std::invalid_argument);
  CHECK_THROWS_AS(g2_zero_series(a, b, 10.0, 20, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(g2_zero_series(a, b, 10.0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("sparse windows are kept but marked unusable") {
  const TimeTagStream s({1, 20'000'000, 1, 2}, {{0, 0, 100}, {0, 1, 105}});
  const auto z = g2_zero_series(s.channel(0), s.channel(1), 10.0, 20, 1.0);
  REQUIRE(z.windows.size() == 2);
  CHECK_FALSE(z.usable[0]);
  CHECK_FALSE(z.usable[1]);
  CHECK(z.coincidences[0] == 1);
}
