#include "photonstat/correlator.hpp"

#include "photonstat/parallel.hpp"

namespace photonstat::corr {
namespace {

void check_compatible(const TimeTagStream& a, const TimeTagStream& b) {
  if (a.n_runs() != b.n_runs()) throw CorrelationError("streams have different run counts");
  if (a.duration_ns() != b.duration_ns()) throw CorrelationError("streams have different durations");
  if (a.resolution_ns() != b.resolution_ns()) throw CorrelationError("streams have different resolutions");
}

RawCorrelation make_raw(const TimeTagStream& a, std::uint64_t lag_bin_ns, std::uint64_t max_lag_ns,
                        std::optional<TimeRange> range) {
  if (lag_bin_ns == 0) throw CorrelationError("lag_bin_ns must be positive");
  if (max_lag_ns % lag_bin_ns != 0) throw CorrelationError("lag_bin_ns must divide max_lag_ns");
  RawCorrelation raw;
  raw.lag_bin_ns = lag_bin_ns;
  raw.max_lag_ns = max_lag_ns;
  raw.counts.assign(2 * (max_lag_ns / lag_bin_ns) + 1, 0);
  raw.duration_ns = a.duration_ns();
  raw.n_runs = a.n_runs();
  raw.resolution_ns = a.resolution_ns();
  raw.range = range.value_or(TimeRange{0, a.duration_ns()});
  return raw;
}

// floor(x / d) for d > 0.
inline std::int64_t floor_div(std::int64_t x, std::int64_t d) {
  const std::int64_t q = x / d;
  return (x % d != 0 && x < 0) ? q - 1 : q;
}

}  // namespace

RawCorrelation cross_correlate(const TimeTagStream& a, const TimeTagStream& b, std::uint64_t lag_bin_ns,
                               std::uint64_t max_lag_ns, std::optional<TimeRange> range, unsigned threads) {
  check_compatible(a, b);
  RawCorrelation raw = make_raw(a, lag_bin_ns, max_lag_ns, range);
  const auto width = static_cast<std::int64_t>(lag_bin_ns);
  const auto half = static_cast<std::int64_t>(raw.half_bins());
  // Accepted lags, in doubled units to keep the half-bin offset integral:
  // 2*lag + width in [0, 2*width*(2*half + 1)).
  const std::int64_t lo2 = -width * (2 * half + 1);
  const std::int64_t hi2 = width * (2 * half + 1);

  const std::size_t n_runs = a.n_runs();
  std::vector<std::vector<std::uint64_t>> partial(n_runs);
  std::vector<std::uint64_t> na(n_runs), nb(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t r) {
    const auto ta = a.run(static_cast<std::uint32_t>(r), raw.range);
    const auto tb = b.run(static_cast<std::uint32_t>(r), raw.range);
    na[r] = ta.size();
    nb[r] = tb.size();
    auto& hist = partial[r];
    hist.assign(raw.counts.size(), 0);
    std::size_t first = 0;
    for (const auto& x : ta) {
      const auto tx = static_cast<std::int64_t>(x.t_ns);
      // Skip b tags whose lag is below the histogram.
      while (first < tb.size() && 2 * (static_cast<std::int64_t>(tb[first].t_ns) - tx) < lo2) ++first;
      for (std::size_t k = first; k < tb.size(); ++k) {
        const std::int64_t lag2 = 2 * (static_cast<std::int64_t>(tb[k].t_ns) - tx);
        if (lag2 >= hi2) break;
        ++hist[static_cast<std::size_t>(floor_div(lag2 + width, 2 * width) + half)];
      }
    }
  });
  for (std::size_t r = 0; r < n_runs; ++r) {
    raw.n_a += na[r];
    raw.n_b += nb[r];
    for (std::size_t j = 0; j < raw.counts.size(); ++j) raw.counts[j] += partial[r][j];
  }
  return raw;
}

std::uint64_t coincidences(const TimeTagStream& a, const TimeTagStream& b, std::uint64_t window_ns,
                           TimeRange range) {
  check_compatible(a, b);
  if (window_ns == 0) throw CorrelationError("coincidence window must be positive");
  if (range.empty()) throw CorrelationError("coincidence time range is empty");
  // |lag| <= window/2  <=>  |2 lag| <= window
  const auto w = static_cast<std::int64_t>(window_ns);
  std::uint64_t total = 0;
  for (std::uint32_t r = 0; r < a.n_runs(); ++r) {
    const auto ta = a.run(r, range);
    const auto tb = b.run(r, range);
    std::size_t first = 0;
    for (const auto& x : ta) {
      const auto tx = static_cast<std::int64_t>(x.t_ns);
      while (first < tb.size() && 2 * (static_cast<std::int64_t>(tb[first].t_ns) - tx) < -w) ++first;
      for (std::size_t k = first; k < tb.size(); ++k) {
        if (2 * (static_cast<std::int64_t>(tb[k].t_ns) - tx) > w) break;
        ++total;
      }
    }
  }
  return total;
}

}  // namespace photonstat::corr
