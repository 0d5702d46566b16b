#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonstat/timetag.hpp"

namespace photonstat::stats {

/// Interval histogram cell covering gap bins [k_begin, k_end). Sparse tails
/// are merged so every cell holds at least `min_group_count` intervals.
struct TiaBin {
  std::uint64_t k_begin = 0;
  std::uint64_t k_end = 0;
  std::uint64_t count = 0;
  double probability = 0.0;  // per gap bin: count / (n_intervals * width)
  double model = 0.0;        // fitted probability per gap bin, averaged over the cell
};

/// P(k) = weight (1 - q) q^k, rate = -ln(q) / interval_bin.
struct GeometricComponent {
  double weight = 0.0;
  double q = 0.0;
  double rate_hz = 0.0;
  double rate_se_hz = 0.0;
};

struct TiaFit {
  std::uint64_t interval_bin_ns = 0;
  std::uint64_t n_intervals = 0;
  std::vector<TiaBin> histogram;
  std::vector<GeometricComponent> components;  // fast to slow; one on fallback
  bool single_component = false;
  std::string fallback_reason;
  double chi2 = 0.0;          // sum count * (log residual)^2
  std::size_t dof = 0;
  double chi2_single = 0.0;
  double normalization = 0.0;  // sum of component weights
  // Gap separating bursts from the waits between them (bins), and the rate of
  // bursts per unit time spent outside bursts.
  double cluster_gap_k = 0.0;
  std::uint64_t n_clusters = 0;
  double cluster_rate_hz = 0.0;
  double cluster_rate_se_hz = 0.0;
  // Slow rate less the background rate passed in the options.
  double atom_rate_hz = 0.0;
  double atom_rate_se_hz = 0.0;

  [[nodiscard]] const GeometricComponent& fast() const { return components.front(); }
  [[nodiscard]] const GeometricComponent& slow() const { return components.back(); }
};

struct TiaOptions {
  std::uint64_t min_intervals = 100;
  std::uint64_t min_group_count = 10;
  double background_rate_hz = 0.0;
  double min_rate_separation = 1.1;  // r_fast / r_slow below this: single component
  double min_weight = 0.01;
  double min_delta_chi2 = 9.0;
};

/// Gaps between successive detections (all channels merged, within each run,
/// both tags inside `range`), binned as k = floor(gap / interval_bin_ns), then
/// a two-component geometric fit by weighted least squares on log
/// probabilities with weights equal to the cell counts. Falls back to one
/// component when the rates are within `min_rate_separation`, one weight is
/// below `min_weight`, or the second component improves chi2 by less than
/// `min_delta_chi2`. Throws std::invalid_argument for fewer than
/// `min_intervals` gaps.
TiaFit tia(const TimeTagStream& stream, std::uint64_t interval_bin_ns, TimeRange range,
           const TiaOptions& options = {});

}  // namespace photonstat::stats
