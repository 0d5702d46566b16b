#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "photonstat/timetag.hpp"

namespace photonstat::corr {

/// Unnormalized cross-correlation histogram G2_ab(tau).
///
/// Bin j holds pairs with lag tau = t_b - t_a in
/// [(j - M) * lag_bin - lag_bin/2, (j - M) * lag_bin + lag_bin/2),
/// M = max_lag / lag_bin, so the lag-0 bin is centered on zero. Pairs are
/// only formed within a run, and both tags must lie in `range`.
struct RawCorrelation {
  std::uint64_t lag_bin_ns = 1;
  std::uint64_t max_lag_ns = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_a = 0;  // tags of a inside range, summed over runs
  std::uint64_t n_b = 0;
  std::uint64_t duration_ns = 0;
  std::uint32_t n_runs = 0;
  std::uint32_t resolution_ns = 1;
  TimeRange range{};

  [[nodiscard]] std::size_t half_bins() const noexcept { return static_cast<std::size_t>(max_lag_ns / lag_bin_ns); }
  [[nodiscard]] std::size_t zero_bin() const noexcept { return half_bins(); }
  /// Center lag of bin j, ns.
  [[nodiscard]] double lag_ns(std::size_t j) const noexcept {
    return (static_cast<double>(j) - static_cast<double>(half_bins())) * static_cast<double>(lag_bin_ns);
  }
};

class CorrelationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sliding-window merge over each run, O(N W) for W tags per lag window.
/// Identical to brute-force pair counting. Errors: streams with different
/// run count, duration or resolution; lag_bin_ns not dividing max_lag_ns.
/// `threads` parallelizes over runs; the result does not depend on it.
RawCorrelation cross_correlate(const TimeTagStream& a, const TimeTagStream& b, std::uint64_t lag_bin_ns,
                               std::uint64_t max_lag_ns, std::optional<TimeRange> range = std::nullopt,
                               unsigned threads = 1);

/// Pairs with |t_b - t_a| <= window_ns / 2, both tags inside `range`, same run.
/// Throws CorrelationError for an empty range or zero window.
std::uint64_t coincidences(const TimeTagStream& a, const TimeTagStream& b, std::uint64_t window_ns,
                           TimeRange range);

}  // namespace photonstat::corr
