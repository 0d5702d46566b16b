#include "photonstat/g2.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "photonstat/theory.hpp"

namespace photonstat::stats {

std::string to_string(G2Norm mode) {
  switch (mode) {
    case G2Norm::Stationary: return "stationary";
    case G2Norm::LocalRate: return "local";
    case G2Norm::Envelope: return "envelope";
  }
  return "unknown";
}

namespace {

void check_streams(const corr::RawCorrelation& raw, const TimeTagStream& a, const TimeTagStream& b) {
  if (a.n_runs() != raw.n_runs || b.n_runs() != raw.n_runs || a.duration_ns() != raw.duration_ns ||
      b.duration_ns() != raw.duration_ns) {
    throw std::invalid_argument("streams do not match the correlation histogram");
  }
}

std::vector<double> stationary_norm(const corr::RawCorrelation& raw, const TimeTagStream& a,
                                    const TimeTagStream& b) {
  const double T = static_cast<double>(raw.range.length());
  double pairs = 0.0;
  for (std::uint32_t r = 0; r < raw.n_runs; ++r) {
    pairs += static_cast<double>(a.run(r, raw.range).size()) * static_cast<double>(b.run(r, raw.range).size());
  }
  std::vector<double> norm(raw.counts.size());
  const double bin = static_cast<double>(raw.lag_bin_ns);
  for (std::size_t j = 0; j < norm.size(); ++j) {
    norm[j] = pairs * bin * std::max(T - std::abs(raw.lag_ns(j)), 0.0) / (T * T);
  }
  return norm;
}

// Boxes of width h starting at range.begin; the last one may be shorter.
std::vector<double> local_rate_norm(const corr::RawCorrelation& raw, const TimeTagStream& a,
                                    const TimeTagStream& b, std::uint64_t h) {
  const TimeRange range = raw.range;
  const auto width = [&](std::uint64_t i) {
    return static_cast<double>(std::min(range.begin_ns + (i + 1) * h, range.end_ns) - (range.begin_ns + i * h));
  };
  // sum_i ca_i rho_b(i + d) for d = -1, 0, +1
  double P[3] = {0.0, 0.0, 0.0};
  std::vector<std::pair<std::uint64_t, double>> ca, cb;
  const auto cells = [&](std::span<const TimeTag> tags, std::vector<std::pair<std::uint64_t, double>>& out) {
    out.clear();
    for (const auto& t : tags) {
      const std::uint64_t i = (t.t_ns - range.begin_ns) / h;
      if (out.empty() || out.back().first != i) out.emplace_back(i, 0.0);
      out.back().second += 1.0;
    }
  };
  for (std::uint32_t r = 0; r < raw.n_runs; ++r) {
    cells(a.run(r, range), ca);
    cells(b.run(r, range), cb);
    std::size_t pb = 0;
    for (const auto& [i, c] : ca) {
      while (pb < cb.size() && cb[pb].first + 1 < i) ++pb;
      for (std::size_t q = pb; q < cb.size() && cb[q].first <= i + 1; ++q) {
        const auto d = static_cast<std::int64_t>(cb[q].first) - static_cast<std::int64_t>(i);
        P[d + 1] += c * cb[q].second / width(cb[q].first);
      }
    }
  }
  std::vector<double> norm(raw.counts.size());
  const double bin = static_cast<double>(raw.lag_bin_ns);
  for (std::size_t j = 0; j < norm.size(); ++j) {
    const double tau = raw.lag_ns(j);
    const double f = std::min(std::abs(tau) / static_cast<double>(h), 1.0);
    const double side = tau >= 0.0 ? P[2] : P[0];
    norm[j] = bin * ((1.0 - f) * P[1] + f * side);
  }
  return norm;
}

std::vector<double> envelope_norm(const corr::RawCorrelation& raw, double inner) {
  std::vector<std::size_t> flank;
  const double cut = inner * static_cast<double>(raw.max_lag_ns);
  for (std::size_t j = 0; j < raw.counts.size(); ++j) {
    if (std::abs(raw.lag_ns(j)) >= cut) flank.push_back(j);
  }
  if (flank.size() < 3) throw std::invalid_argument("envelope normalization needs at least three flank bins");
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
    for (std::size_t j : flank) {
      const double t = std::abs(raw.lag_ns(j));
      const Eigen::Vector3d x(1.0, t, t * t);
      const double model = iter == 0 ? static_cast<double>(raw.counts[j]) : c.dot(x);
      const double w = 1.0 / std::max(model, 1.0);
      A += w * x * x.transpose();
      y += w * static_cast<double>(raw.counts[j]) * x;
    }
    c = A.ldlt().solve(y);
  }
  std::vector<double> norm(raw.counts.size());
  for (std::size_t j = 0; j < norm.size(); ++j) {
    const double t = std::abs(raw.lag_ns(j));
    norm[j] = c[0] + c[1] * t + c[2] * t * t;
  }
  return norm;
}

}  // namespace

G2Histogram g2_normalize(const corr::RawCorrelation& raw, const TimeTagStream& a, const TimeTagStream& b,
                         const G2Options& options) {
  check_streams(raw, a, b);
  G2Histogram h;
  h.raw = raw;
  h.mode = options.mode;
  h.accidental = stationary_norm(raw, a, b);
  switch (options.mode) {
    case G2Norm::Stationary:
      h.norm = h.accidental;
      break;
    case G2Norm::LocalRate:
      h.bandwidth_ns = options.bandwidth_ns ? options.bandwidth_ns : 5 * (2 * raw.max_lag_ns + raw.lag_bin_ns);
      h.norm = local_rate_norm(raw, a, b, h.bandwidth_ns);
      break;
    case G2Norm::Envelope:
      h.norm = envelope_norm(raw, options.envelope_inner);
      break;
  }
  h.g2.resize(h.norm.size());
  h.sigma.resize(h.norm.size());
  for (std::size_t j = 0; j < h.norm.size(); ++j) {
    if (!(h.norm[j] > 0.0)) throw std::invalid_argument("g2 reference is zero at lag bin " + std::to_string(j));
    const double c = static_cast<double>(raw.counts[j]);
    h.g2[j] = c / h.norm[j];
    h.sigma[j] = std::sqrt(std::max(c, 1.0)) / h.norm[j];
  }
  return h;
}

std::vector<double> g2_expected(const corr::RawCorrelation& raw, const TwoLevelParams& params) {
  constexpr int kSub = 8;  // quadrature points per resolution step
  const auto res = static_cast<std::int64_t>(raw.resolution_ns);
  const auto M = static_cast<std::int64_t>(raw.half_bins());
  const auto bin = static_cast<std::int64_t>(raw.lag_bin_ns);
  const double step = static_cast<double>(res) / kSub;
  // |tau| grid covering every lag a bin can reach, plus one resolution step
  const std::int64_t max_abs = M * bin + bin / 2 + 2 * res;
  const auto n_grid = static_cast<std::size_t>(max_abs * kSub / res + kSub);
  std::vector<double> grid(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) grid[i] = (static_cast<double>(i) + 0.5) * step;
  const auto curve = theory::g2_analytic(params, grid);

  const auto smeared = [&](std::int64_t lag) {
    double sum = 0.0, wsum = 0.0;
    for (int i = 0; i < 2 * kSub; ++i) {
      const double u = (static_cast<double>(i) + 0.5) * step - static_cast<double>(res);
      const double w = 1.0 - std::abs(u) / static_cast<double>(res);
      const double t = std::abs(static_cast<double>(lag) + u);
      const auto k = std::min(static_cast<std::size_t>(t / step), n_grid - 1);
      sum += w * curve.values[k];
      wsum += w;
    }
    return sum / wsum;
  };

  std::vector<double> out(raw.counts.size());
  for (std::int64_t j = 0; j < 2 * M + 1; ++j) {
    // integer lags with floor((2 lag + bin) / (2 bin)) == j - M
    const std::int64_t lo2 = (j - M) * 2 * bin - bin;  // 2 lag >= lo2
    const std::int64_t hi2 = lo2 + 2 * bin;           // 2 lag < hi2
    std::int64_t lag = lo2 >= 0 ? (lo2 + 1) / 2 : -((-lo2) / 2);
    lag = (lag >= 0 ? (lag + res - 1) / res : -((-lag) / res)) * res;
    double sum = 0.0;
    int n = 0;
    for (; 2 * lag < hi2; lag += res, ++n) sum += smeared(lag);
    out[static_cast<std::size_t>(j)] = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

G2Window g2_window(const G2Histogram& h, double half_width_ns) {
  G2Window w;
  for (std::size_t j = 0; j < h.norm.size(); ++j) {
    if (std::abs(h.raw.lag_ns(j)) > half_width_ns) continue;
    w.counts += h.raw.counts[j];
    w.norm += h.norm[j];
    w.accidental += h.accidental[j];
  }
  if (w.norm > 0.0) {
    w.g2 = static_cast<double>(w.counts) / w.norm;
    w.sigma = std::sqrt(std::max(static_cast<double>(w.counts), 1.0)) / w.norm;
  }
  return w;
}

CorrectedG2 g2_background_correct(double g2_meas, double signal_rate, double background_rate, double sigma_meas) {
  if (!(signal_rate > 0.0)) throw std::invalid_argument("signal rate must be > 0");
  if (background_rate < 0.0) throw std::invalid_argument("background rate must be >= 0");
  const double S = signal_rate, B = background_rate, I = S + B;
  CorrectedG2 out;
  out.value = (g2_meas * I * I - 2.0 * S * B - B * B) / (S * S);
  out.sigma = std::abs(sigma_meas) * I * I / (S * S);
  out.inconsistent = out.value < -3.0 * out.sigma;
  return out;
}

BackgroundFrame background_frame(double norm, double accidental) {
  BackgroundFrame f;
  f.signal = std::sqrt(std::max(norm - accidental, 0.0));
  f.background = std::sqrt(std::max(norm, 0.0)) - f.signal;
  return f;
}

G2ZeroSeries g2_zero_series(const TimeTagStream& a, const TimeTagStream& b, double window_ms,
                            std::uint64_t coincidence_window_ns, double alpha, const G2ZeroOptions& options) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(window_ms > 0.0) || coincidence_window_ns == 0) throw std::invalid_argument("windows must be positive");
  if (a.n_runs() != b.n_runs() || a.duration_ns() != b.duration_ns() || a.resolution_ns() != b.resolution_ns()) {
    throw std::invalid_argument("streams have different run partitioning");
  }
  const auto window_ns = static_cast<std::uint64_t>(std::llround(window_ms * 1e6));
  if (window_ns == 0 || a.duration_ns() % window_ns != 0) {
    throw std::invalid_argument("arrival-time window must tile the run duration");
  }

  G2ZeroSeries s;
  s.window_ns = window_ns;
  s.coincidence_window_ns = coincidence_window_ns;
  s.bandwidth_ns = options.bandwidth_ns ? options.bandwidth_ns : 5 * coincidence_window_ns;
  s.alpha = alpha;
  s.dwell_ns = options.dwell_ns;
  s.background_rate_cps = options.background_rate_cps;

  const std::uint64_t h = s.bandwidth_ns;
  const std::uint64_t res = a.resolution_ns();
  const double lag_width = static_cast<double>(2 * (coincidence_window_ns / (2 * res)) + 1) * static_cast<double>(res);
  const std::uint64_t n_windows = a.duration_ns() / window_ns;
  const double window_s = static_cast<double>(window_ns) * 1e-9;

  for (std::uint64_t w = 0; w < n_windows; ++w) {
    const TimeRange range{w * window_ns, (w + 1) * window_ns};
    const std::uint64_t C = corr::coincidences(a, b, coincidence_window_ns, range);
    std::uint64_t detections = 0;
    double norm = 0.0;
    for (std::uint32_t r = 0; r < a.n_runs(); ++r) {
      const auto ta = a.run(r, range);
      const auto tb = b.run(r, range);
      detections += ta.size() + tb.size();
      std::size_t j = 0;
      for (std::size_t i = 0; i < ta.size();) {
        const std::uint64_t cell = (ta[i].t_ns - range.begin_ns) / h;
        std::size_t na = 0;
        while (i < ta.size() && (ta[i].t_ns - range.begin_ns) / h == cell) ++na, ++i;
        while (j < tb.size() && (tb[j].t_ns - range.begin_ns) / h < cell) ++j;
        std::size_t nb = 0;
        while (j + nb < tb.size() && (tb[j + nb].t_ns - range.begin_ns) / h == cell) ++nb;
        const std::uint64_t cell_end = std::min(range.begin_ns + (cell + 1) * h, range.end_ns);
        const double width = static_cast<double>(cell_end - (range.begin_ns + cell * h));
        norm += static_cast<double>(na) * static_cast<double>(nb) / width * lag_width;
      }
    }
    const double rate = static_cast<double>(detections) / (static_cast<double>(a.n_runs()) * window_s);
    const double n_atoms = std::max(rate - options.background_rate_cps, 0.0) * options.dwell_ns * 1e-9 / alpha;
    const bool usable = detections >= options.min_counts && norm > 0.0;
    s.windows.push_back(range);
    s.detections.push_back(detections);
    s.coincidences.push_back(C);
    s.norm.push_back(norm);
    s.g2.push_back(norm > 0.0 ? static_cast<double>(C) / norm : std::numeric_limits<double>::quiet_NaN());
    s.sigma.push_back(norm > 0.0 ? std::sqrt(std::max(static_cast<double>(C), 1.0)) / norm
                                 : std::numeric_limits<double>::quiet_NaN());
    s.rate_cps.push_back(rate);
    s.mean_atoms.push_back(n_atoms);
    s.overlay.push_back(theory::g2_zero_vs_flux(alpha, n_atoms));
    s.usable.push_back(usable);
  }
  return s;
}

}  // namespace photonstat::stats
