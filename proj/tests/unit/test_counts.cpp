#include <cmath>
#include <random>

#include "doctest.h"
#include "photonstat/counts.hpp"
#include "random_streams.hpp"

using namespace photonstat;
using namespace photonstat::stats;
using doctest::Approx;

namespace {

// Compound-Poisson bins drawn directly: Poisson(lambda_k) atoms with
// Poisson(alpha) counts each, plus Poisson(b) background.
BinnedCounts compound_poisson(std::uint64_t seed, std::uint32_t runs, std::size_t bins, double alpha, double b,
                              std::size_t quiet_bins, double peak_atoms) {
  std::mt19937_64 rng(seed);
  BinnedCounts bc{1000, runs, bins, std::vector<std::uint32_t>(runs * bins)};
  std::poisson_distribution<unsigned> per_atom(alpha), bg(b);
  for (std::uint32_t r = 0; r < runs; ++r) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double lambda = k < quiet_bins ? 0.0 : peak_atoms * std::exp(-double(k - quiet_bins) / 150.0);
      const unsigned atoms = lambda > 0 ? std::poisson_distribution<unsigned>(lambda)(rng) : 0;
      unsigned n = bg(rng);
      for (unsigned i = 0; i < atoms; ++i) n += per_atom(rng);
      bc.counts[r * bins + k] = n;
    }
  }
  return bc;
}

}  // namespace

TEST_CASE("bin_counts conserves tags and filters channels") {
  const auto s = testutil::poisson_stream(1, 5, 2, 1'000'000, 2e5);
  const auto bc = bin_counts(s, 1000);
  CHECK(bc.n_bins == 1000);
  CHECK(bc.n_runs == 5);
  CHECK(bc.total() == s.size());
  const std::uint8_t ch1[] = {1};
  CHECK(bin_counts(s, 1000, ch1).total() == s.count_channel(1));
  CHECK(bc.bin_range(3) == TimeRange{3000, 4000});
  CHECK_THROWS_AS(bin_counts(s, 333), std::invalid_argument);

  const StreamHeader h{1, 100, 2, 1};
  TimeTagStream t(h, {{0, 0, 5}, {0, 0, 15}, {0, 0, 19}, {1, 0, 99}});
  const auto small = bin_counts(t, 10);
  CHECK(small.at(0, 0) == 1);
  CHECK(small.at(0, 1) == 2);
  CHECK(small.at(1, 9) == 1);
}

TEST_CASE("Fano series of Poisson input: CI covers 1 in at least 90% of bins") {
  const auto s = testutil::poisson_stream(4, 200, 1, 50'000'000, 2e4);
  const auto fs = fano_series(bin_counts(s, 250'000), {200, 11, 0.95, 2});
  std::size_t covered = 0;
  for (std::size_t k = 0; k < fs.ratio.size(); ++k) {
    CHECK(fs.ratio[k] >= 0.0);
    if (fs.ratio_lo[k] <= 1.0 && 1.0 <= fs.ratio_hi[k]) ++covered;
  }
  CHECK(covered >= 0.9 * fs.ratio.size());
  CHECK(pooled_ratio(fs, 0, fs.ratio.size()) == Approx(1.0).epsilon(0.02));
}

TEST_CASE("Fano series is reproducible and independent of threads") {
  const auto bc = compound_poisson(3, 40, 100, 1.0, 2.0, 20, 5.0);
  const auto a = fano_series(bc, {50, 1, 0.9, 1});
  const auto b = fano_series(bc, {50, 1, 0.9, 3});
  CHECK(a.ratio_lo == b.ratio_lo);
  CHECK(a.ratio_hi == b.ratio_hi);
  CHECK(a.resamples == 50);
}

TEST_CASE("empty bins give NaN ratio") {
  BinnedCounts bc{10, 3, 2, {0, 1, 0, 2, 0, 3}};
  const auto fs = fano_series(bc, {10, 1, 0.95, 1});
  CHECK(std::isnan(fs.ratio[0]));
  CHECK(fs.mean[1] == Approx(2.0));
  CHECK(fs.variance[1] == Approx(1.0));
  BinnedCounts one{10, 1, 1, {4}};
  CHECK_THROWS_AS(fano_series(one), std::invalid_argument);
}

TEST_CASE("fit_alpha recovers alpha and background from compound-Poisson bins") {
  for (double alpha : {0.25, 1.08, 4.5}) {
    const auto bc = compound_poisson(17, 400, 600, alpha, 0.05, 50, 3.0);
    const auto fs = fano_series(bc, {0, 1, 0.95, 1});
    AlphaFitOptions opt;
    opt.bootstrap.resamples = 100;
    const auto fit = fit_alpha(fs, bc, {0, 50'000}, opt);
    INFO("alpha = " << alpha);
    CHECK(fit.alpha == Approx(alpha).epsilon(0.05));
    CHECK(fit.background_b == Approx(0.05).epsilon(0.15));
    CHECK(fit.alpha_lo < fit.alpha);
    CHECK(fit.alpha_hi > fit.alpha);
    CHECK(fit.alpha_se > 0.0);
    CHECK(std::abs(fit.alpha - alpha) < 4.0 * fit.alpha_se + 0.01 * alpha);
    CHECK(fit.slope == Approx(1.0 + fit.alpha));
    CHECK(fit.n_background_bins == 50);
    CHECK(fit.warnings.empty());
  }
}

TEST_CASE("fano bounds: stationary ratio between 1 and 1 + alpha, and 1 as flux vanishes") {
  const auto bc = compound_poisson(23, 300, 1200, 1.08, 0.2, 50, 4.0);
  const auto fs = fano_series(bc, {0, 1, 0.95, 1});
  const double plateau = pooled_ratio(fs, 50, 100);
  CHECK(plateau >= 1.0);
  CHECK(plateau <= 2.08 + 0.05);
  const double tail = pooled_ratio(fs, 1100, 1200);  // ~0.002 atoms per bin
  CHECK(tail == Approx(1.0).epsilon(0.05));
}

TEST_CASE("fit_alpha warnings and errors") {
  const auto bc = compound_poisson(5, 100, 200, 1.0, 0.5, 5, 3.0);
  const auto fs = fano_series(bc, {0, 1, 0.95, 1});
  AlphaFitOptions opt;
  opt.bootstrap.resamples = 10;
  CHECK_THROWS_AS(fit_alpha(fs, bc, {0, 5000}, opt), std::invalid_argument);
  const auto fit = fit_alpha(fs, bc, {0, 20'000}, opt);
  REQUIRE(fit.warnings.size() == 1);
  CHECK(fit.warnings[0] == "background_window_has_signal");
  BinnedCounts other = bc;
  other.bin_ns = 7;
  CHECK_THROWS_AS(fit_alpha(fs, other, {0, 20'000}, opt), std::invalid_argument);
}

TEST_CASE("scattered photon budget") {
  CHECK(scattered_photons(1.08, 0.009) == Approx(120.0));
  CHECK(scattered_photons(0.0, 0.009) == 0.0);
  CHECK(scattered_photons(4.5, 0.0375) == Approx(120.0));
  CHECK_THROWS_AS(scattered_photons(1.0, 0.0), std::invalid_argument);
}
