#include "photonstat/counts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "photonstat/parallel.hpp"
#include "photonstat/rng.hpp"

namespace photonstat::stats {

std::uint64_t BinnedCounts::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

BinnedCounts bin_counts(const TimeTagStream& stream, std::uint64_t bin_ns, std::span<const std::uint8_t> channels) {
  if (bin_ns == 0 || stream.duration_ns() % bin_ns != 0) {
    throw std::invalid_argument("bin width must divide the run duration");
  }
  BinnedCounts bc;
  bc.bin_ns = bin_ns;
  bc.n_runs = stream.n_runs();
  bc.n_bins = stream.duration_ns() / bin_ns;
  bc.counts.assign(static_cast<std::size_t>(bc.n_runs) * bc.n_bins, 0);
  bool wanted[256] = {};
  if (channels.empty()) {
    std::fill(std::begin(wanted), std::end(wanted), true);
  } else {
    for (auto c : channels) wanted[c] = true;
  }
  for (const auto& t : stream.tags()) {
    if (wanted[t.channel]) ++bc.counts[static_cast<std::size_t>(t.run_id) * bc.n_bins + t.t_ns / bin_ns];
  }
  return bc;
}

namespace {

struct Moments {
  std::vector<double> mean, variance;
};

// Per-bin weighted mean and unbiased variance, with integer run weights
// (multiplicities of a bootstrap resample) summing to n.
Moments weighted_moments(const BinnedCounts& bc, std::span<const std::uint32_t> weight) {
  const std::size_t nb = bc.n_bins;
  std::vector<double> s1(nb, 0.0), s2(nb, 0.0);
  double n = 0.0;
  for (std::uint32_t r = 0; r < bc.n_runs; ++r) {
    const double w = weight.empty() ? 1.0 : weight[r];
    if (w == 0.0) continue;
    n += w;
    const std::uint32_t* row = bc.counts.data() + static_cast<std::size_t>(r) * nb;
    for (std::size_t k = 0; k < nb; ++k) {
      const double c = row[k];
      s1[k] += w * c;
      s2[k] += w * c * c;
    }
  }
  Moments m{std::move(s1), std::move(s2)};
  for (std::size_t k = 0; k < nb; ++k) {
    const double mean = m.mean[k] / n;
    const double var = n > 1.0 ? std::max(0.0, (m.variance[k] - n * mean * mean) / (n - 1.0)) : 0.0;
    m.mean[k] = mean;
    m.variance[k] = var;
  }
  return m;
}

std::vector<std::uint32_t> resample_weights(std::uint32_t n_runs, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, n_runs - 1);
  std::vector<std::uint32_t> w(n_runs, 0);
  for (std::uint32_t i = 0; i < n_runs; ++i) ++w[pick(rng)];
  return w;
}

double quantile(std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] + f * (v[i + 1] - v[i]) : v[i];
}

// Inverse standard normal CDF by bisection on erfc.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double safe_ratio(double var, double mean) {
  return mean > 0.0 ? var / mean : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

FanoSeries fano_series(const BinnedCounts& bc, const BootstrapOptions& options) {
  if (bc.n_runs < 2) throw std::invalid_argument("Fano series needs at least two runs");
  FanoSeries fs;
  fs.bin_ns = bc.bin_ns;
  fs.n_runs = bc.n_runs;
  fs.resamples = options.resamples;
  fs.confidence = options.confidence;

  auto m = weighted_moments(bc, {});
  fs.ratio.resize(bc.n_bins);
  for (std::size_t k = 0; k < bc.n_bins; ++k) fs.ratio[k] = safe_ratio(m.variance[k], m.mean[k]);
  fs.mean = std::move(m.mean);
  fs.variance = std::move(m.variance);

  const std::size_t nb = bc.n_bins;
  const unsigned B = options.resamples;
  std::vector<float> boot(static_cast<std::size_t>(B) * nb);
  parallel_for(B, options.threads, [&](std::size_t b) {
    const auto w = resample_weights(bc.n_runs, derive_seed(options.seed, b));
    const auto mb = weighted_moments(bc, w);
    for (std::size_t k = 0; k < nb; ++k) {
      boot[b * nb + k] = static_cast<float>(safe_ratio(mb.variance[k], mb.mean[k]));
    }
  });

  const double tail = 0.5 * (1.0 - options.confidence);
  fs.ratio_lo.assign(nb, std::numeric_limits<double>::quiet_NaN());
  fs.ratio_hi.assign(nb, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column;
  for (std::size_t k = 0; k < nb; ++k) {
    column.clear();
    for (unsigned b = 0; b < B; ++b) {
      const float v = boot[b * nb + k];
      if (std::isfinite(v)) column.push_back(v);
    }
    if (column.empty()) continue;
    fs.ratio_lo[k] = quantile(column, tail);
    fs.ratio_hi[k] = quantile(column, 1.0 - tail);
  }
  return fs;
}

double pooled_ratio(const FanoSeries& fs, std::size_t first_bin, std::size_t last_bin) {
  double v = 0.0, m = 0.0;
  for (std::size_t k = first_bin; k < last_bin && k < fs.mean.size(); ++k) {
    v += fs.variance[k];
    m += fs.mean[k];
  }
  return safe_ratio(v, m);
}

namespace {

struct AlphaPoint {
  double alpha, b;
  double chi2;
};

// Cumulants kappa_2..4 of a bin holding Poisson(lambda) atoms with
// Poisson(alpha) counts each, plus Poisson(b) background.
struct Cumulants {
  double k2, k3, k4;
};

Cumulants cumulants(double mean, double alpha, double b) {
  const double a = std::max(alpha, 1e-9);
  const double lambda = std::max(mean - b, 0.0) / a;
  const double a2 = a * a, a3 = a2 * a, a4 = a3 * a;
  return {lambda * (a + a2) + b, lambda * (a + 3 * a2 + a3) + b, lambda * (a + 7 * a2 + 6 * a3 + a4) + b};
}

// Centered moving average over 2 * half + 1 bins, truncated at the edges.
std::vector<double> smooth(std::span<const double> v, std::size_t half) {
  std::vector<double> prefix(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) prefix[i + 1] = prefix[i] + v[i];
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(v.size(), i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

// Sampling variance of (sample variance - sample mean) over n runs.
double residual_variance(double mean, double alpha, double b, double n) {
  const Cumulants c = cumulants(mean, alpha, b);
  const double v = c.k4 / n + 2.0 * c.k2 * c.k2 / (n - 1.0) + c.k2 / n - 2.0 * c.k3 / n;
  return std::max(v, 1e-12);
}

constexpr std::size_t kWeightSmoothing = 25;

// Weighted slope of y = var - mean on x = mean - b. Weights come from the
// model variance of y at a smoothed mean, so they do not follow each bin's
// own fluctuation. The expected sampling terms E[dx^2] = k2/n and
// E[dx dy] = (k3 - k2)/n are subtracted so noise in x does not flatten the
// slope.
AlphaPoint solve_alpha(std::span<const double> mean, std::span<const double> variance,
                       std::span<const std::size_t> background_bins, double n_runs) {
  double b = 0.0;
  for (auto k : background_bins) b += mean[k];
  b /= static_cast<double>(background_bins.size());
  const auto ms = smooth(mean, kWeightSmoothing);

  double alpha = 0.0;
  {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double x = mean[k] - b, y = variance[k] - mean[k];
      sxy += x * y;
      sxx += x * x;
    }
    alpha = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  for (int iter = 0; iter < 6; ++iter) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double w = 1.0 / residual_variance(ms[k], alpha, b, n_runs);
      const Cumulants c = cumulants(mean[k], alpha, b);
      const double x = mean[k] - b, y = variance[k] - mean[k];
      sxy += w * (x * y - (c.k3 - c.k2) / n_runs);
      sxx += w * (x * x - c.k2 / n_runs);
    }
    alpha = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  double chi2 = 0.0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double x = mean[k] - b, y = variance[k] - mean[k];
    const double r = y - alpha * x;
    chi2 += r * r / residual_variance(ms[k], alpha, b, n_runs);
  }
  return {alpha, b, chi2};
}

}  // namespace

AlphaFit fit_alpha(const FanoSeries& fs, const BinnedCounts& bc, TimeRange background_window,
                   const AlphaFitOptions& options) {
  if (fs.mean.size() != bc.n_bins || fs.bin_ns != bc.bin_ns) {
    throw std::invalid_argument("Fano series and binned counts do not match");
  }
  std::vector<std::size_t> bg;
  for (std::size_t k = 0; k < bc.n_bins; ++k) {
    const TimeRange r = bc.bin_range(k);
    if (r.begin_ns >= background_window.begin_ns && r.end_ns <= background_window.end_ns) bg.push_back(k);
  }
  if (bg.size() < options.min_background_bins) {
    throw std::invalid_argument("background window must contain at least " +
                                std::to_string(options.min_background_bins) + " bins");
  }

  const double n = bc.n_runs;
  AlphaFit fit;
  const AlphaPoint point = solve_alpha(fs.mean, fs.variance, bg, n);
  fit.alpha = point.alpha;
  fit.background_b = point.b;
  fit.slope = 1.0 + point.alpha;
  fit.intercept = -point.alpha * point.b;
  fit.chi2 = point.chi2;
  fit.n_bins = bc.n_bins;
  fit.dof = bc.n_bins > 1 ? bc.n_bins - 1 : 0;
  fit.n_background_bins = bg.size();
  {
    double ss = 0.0;
    for (std::size_t k = 0; k < bc.n_bins; ++k) {
      const double r = (fs.variance[k] - fs.mean[k]) - point.alpha * (fs.mean[k] - point.b);
      ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(bc.n_bins, 1)));
  }
  fit.background_ratio = pooled_ratio(fs, bg.front(), bg.back() + 1);
  if (fit.background_ratio > options.background_fano_limit) {
    fit.warnings.push_back("background_window_has_signal");
  }

  const auto& bo = options.bootstrap;
  std::vector<double> alphas(bo.resamples), bs(bo.resamples);
  parallel_for(bo.resamples, bo.threads, [&](std::size_t i) {
    const auto w = resample_weights(bc.n_runs, derive_seed(bo.seed ^ 0xA1FA, i));
    const auto m = weighted_moments(bc, w);
    const AlphaPoint p = solve_alpha(m.mean, m.variance, bg, n);
    alphas[i] = p.alpha;
    bs[i] = p.b;
  });
  if (bo.resamples >= 2) {
    const double R = bo.resamples;
    const double ma = std::accumulate(alphas.begin(), alphas.end(), 0.0) / R;
    const double mb = std::accumulate(bs.begin(), bs.end(), 0.0) / R;
    double caa = 0.0, cab = 0.0, cbb = 0.0;
    for (unsigned i = 0; i < bo.resamples; ++i) {
      caa += (alphas[i] - ma) * (alphas[i] - ma);
      cab += (alphas[i] - ma) * (bs[i] - mb);
      cbb += (bs[i] - mb) * (bs[i] - mb);
    }
    fit.covariance[0][0] = caa / (R - 1);
    fit.covariance[0][1] = fit.covariance[1][0] = cab / (R - 1);
    fit.covariance[1][1] = cbb / (R - 1);
    fit.alpha_se = std::sqrt(fit.covariance[0][0]);
    fit.background_se = std::sqrt(fit.covariance[1][1]);
    // Normal interval around the point estimate; resampled runs repeat, which
    // shifts the whole bootstrap distribution of this estimator downwards.
    const double z = normal_quantile(0.5 + 0.5 * bo.confidence);
    fit.alpha_lo = fit.alpha - z * fit.alpha_se;
    fit.alpha_hi = fit.alpha + z * fit.alpha_se;
  } else {
    fit.alpha_lo = fit.alpha_hi = fit.alpha;
  }
  return fit;
}

double scattered_photons(double alpha, double p_det) {
  if (!(p_det > 0.0)) throw std::invalid_argument("p_det must be > 0");
  return alpha / p_det;
}

}  // namespace photonstat::stats
