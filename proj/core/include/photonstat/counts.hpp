#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "photonstat/timetag.hpp"

namespace photonstat::stats {

/// Photon counts per (run, time bin). Row-major: counts[run * n_bins + bin].
struct BinnedCounts {
  std::uint64_t bin_ns = 0;
  std::uint32_t n_runs = 0;
  std::size_t n_bins = 0;
  std::vector<std::uint32_t> counts;

  [[nodiscard]] std::uint32_t at(std::uint32_t run, std::size_t bin) const noexcept {
    return counts[static_cast<std::size_t>(run) * n_bins + bin];
  }
  [[nodiscard]] std::uint64_t total() const noexcept;
  [[nodiscard]] TimeRange bin_range(std::size_t bin) const noexcept {
    return {bin * bin_ns, (bin + 1) * bin_ns};
  }
};

/// Histogram of tags on the given channels (all channels when empty).
/// Throws std::invalid_argument unless bin_ns divides the run duration.
BinnedCounts bin_counts(const TimeTagStream& stream, std::uint64_t bin_ns,
                        std::span<const std::uint8_t> channels = {});

struct BootstrapOptions {
  unsigned resamples = 200;
  std::uint64_t seed = 0x5EED'F00D;
  double confidence = 0.95;
  unsigned threads = 1;
};

/// Across-run mean and variance per bin with percentile bootstrap intervals
/// for var/mean (runs resampled with replacement). `ratio` is NaN where the
/// mean is zero.
struct FanoSeries {
  std::uint64_t bin_ns = 0;
  std::uint32_t n_runs = 0;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> ratio;
  std::vector<double> ratio_lo;
  std::vector<double> ratio_hi;
  unsigned resamples = 0;
  double confidence = 0.0;
};

/// Throws std::invalid_argument for fewer than two runs.
FanoSeries fano_series(const BinnedCounts& bc, const BootstrapOptions& options = {});

/// var/mean pooled over bins: sum(var) / sum(mean).
double pooled_ratio(const FanoSeries& fs, std::size_t first_bin, std::size_t last_bin);

/// Counts per atom and background from var = (1 + alpha) mean - alpha b.
struct AlphaFit {
  double alpha = 0.0;
  double alpha_lo = 0.0;  // alpha -+ z se, se from the run bootstrap
  double alpha_hi = 0.0;
  double alpha_se = 0.0;
  double background_b = 0.0;  // counts per bin
  double background_se = 0.0;
  double slope = 0.0;  // 1 + alpha
  double intercept = 0.0;  // -alpha b
  double covariance[2][2] = {{0, 0}, {0, 0}};  // (alpha, b), bootstrap
  double chi2 = 0.0;
  std::size_t dof = 0;
  double rms_residual = 0.0;
  std::size_t n_bins = 0;
  std::size_t n_background_bins = 0;
  double background_ratio = 0.0;  // pooled var/mean inside the background window
  std::vector<std::string> warnings;
};

struct AlphaFitOptions {
  BootstrapOptions bootstrap{};
  double background_fano_limit = 1.2;
  std::size_t min_background_bins = 10;
};

/// b is the mean count per bin inside `background_window` (bins fully
/// contained). alpha is then the weighted least-squares slope of
/// (var - mean) against (mean - b) over all bins. Weights are the inverse
/// sampling variance of var - mean predicted for a compound-Poisson bin with
/// Poisson(alpha) counts per atom, refined over a few iterations. A
/// background window whose pooled var/mean exceeds the limit raises the
/// warning "background_window_has_signal".
AlphaFit fit_alpha(const FanoSeries& fs, const BinnedCounts& bc, TimeRange background_window,
                   const AlphaFitOptions& options = {});

/// Photons scattered per atom implied by alpha: alpha / p_det.
double scattered_photons(double alpha, double p_det);

}  // namespace photonstat::stats
