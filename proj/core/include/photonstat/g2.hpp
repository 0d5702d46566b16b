#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonstat/config.hpp"
#include "photonstat/correlator.hpp"
#include "photonstat/timetag.hpp"

namespace photonstat::stats {

/// Reference pair count used as the g2 denominator.
///   Stationary: sum over runs of N_a N_b lag_bin (T - |tau|) / T^2.
///   LocalRate:  per-run rates from box histograms of width `bandwidth_ns`,
///               product of a's rate with b's rate shifted by tau (linear
///               interpolation between neighbouring boxes).
///   Envelope:   weighted quadratic c0 + c1 |tau| + c2 tau^2 fitted to the
///               raw counts at |tau| >= envelope_inner * max_lag, so g2 is
///               relative to the pair level just outside the central feature.
enum class G2Norm { Stationary, LocalRate, Envelope };

std::string to_string(G2Norm mode);

struct G2Options {
  G2Norm mode = G2Norm::Stationary;
  std::uint64_t bandwidth_ns = 0;  // 0: 5 x (2 max_lag + lag_bin)
  double envelope_inner = 0.25;
};

struct G2Histogram {
  corr::RawCorrelation raw;
  G2Norm mode = G2Norm::Stationary;
  std::uint64_t bandwidth_ns = 0;
  std::vector<double> norm;
  std::vector<double> accidental;  // Stationary reference, whatever the mode
  std::vector<double> g2;
  std::vector<double> sigma;  // sqrt(max(counts, 1)) / norm
};

/// `a` and `b` must be the streams `raw` was computed from. Throws
/// std::invalid_argument when any bin has zero reference count.
G2Histogram g2_normalize(const corr::RawCorrelation& raw, const TimeTagStream& a, const TimeTagStream& b,
                         const G2Options& options = {});

/// g2_analytic averaged over each bin of `raw`, with every quantized lag
/// spread over the true lags that round to it (triangle of half-width one
/// resolution step).
std::vector<double> g2_expected(const corr::RawCorrelation& raw, const TwoLevelParams& params);

/// Pooled g2 over bins whose centre satisfies |tau| <= half_width_ns.
struct G2Window {
  double g2 = 0.0;
  double sigma = 0.0;
  std::uint64_t counts = 0;
  double norm = 0.0;
  double accidental = 0.0;
};
G2Window g2_window(const G2Histogram& h, double half_width_ns);

struct CorrectedG2 {
  double value = 0.0;
  double sigma = 0.0;
  bool inconsistent = false;  // value below -3 sigma
};

/// Removes pairs involving an independent Poisson background B from a
/// measured g2(0) at total rate I = S + B:
///   (g I^2 - 2 S B - B^2) / S^2
/// sigma_meas propagates linearly. Throws std::invalid_argument for negative
/// rates or S = 0.
CorrectedG2 g2_background_correct(double g2_meas, double signal_rate, double background_rate,
                                  double sigma_meas = 0.0);

/// Signal and background levels, in units where (S + B)^2 equals the
/// reference level at `norm`, such that B covers every pair counted by the
/// Stationary reference `accidental`.
struct BackgroundFrame {
  double signal = 0.0;
  double background = 0.0;
};
BackgroundFrame background_frame(double norm, double accidental);

struct G2ZeroOptions {
  double dwell_ns = 12000.0;
  double background_rate_cps = 0.0;  // both channels together
  std::uint64_t bandwidth_ns = 0;    // 0: 5 x coincidence window
  std::uint64_t min_counts = 10;
};

/// g2(0) per arrival-time window from coincidences over a LocalRate
/// reference. <N> = (rate - background) dwell / alpha with the rate summed
/// over both channels. Windows with fewer than min_counts detections are
/// kept but marked unusable.
struct G2ZeroSeries {
  std::uint64_t window_ns = 0;
  std::uint64_t coincidence_window_ns = 0;
  std::uint64_t bandwidth_ns = 0;
  double alpha = 0.0;
  double dwell_ns = 0.0;
  double background_rate_cps = 0.0;
  std::vector<TimeRange> windows;
  std::vector<std::uint64_t> detections;
  std::vector<std::uint64_t> coincidences;
  std::vector<double> norm;
  std::vector<double> g2;
  std::vector<double> sigma;
  std::vector<double> rate_cps;
  std::vector<double> mean_atoms;
  std::vector<double> overlay;  // 1 - (1 - exp(-alpha <N>)) / (alpha <N>)
  std::vector<bool> usable;
};

/// Throws std::invalid_argument unless alpha > 0, both windows are positive
/// and window_ms tiles the run duration.
G2ZeroSeries g2_zero_series(const TimeTagStream& a, const TimeTagStream& b, double window_ms,
                            std::uint64_t coincidence_window_ns, double alpha, const G2ZeroOptions& options = {});

}  // namespace photonstat::stats
