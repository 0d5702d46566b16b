#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace photonstat {

/// One photon detection: run index, detector channel, and time since run start.
struct TimeTag {
  std::uint32_t run_id = 0;
  std::uint8_t channel = 0;
  std::uint64_t t_ns = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Half-open time interval [begin_ns, end_ns) within a run.
struct TimeRange {
  std::uint64_t begin_ns = 0;
  std::uint64_t end_ns = 0;

  [[nodiscard]] bool empty() const noexcept { return end_ns <= begin_ns; }
  [[nodiscard]] bool contains(std::uint64_t t) const noexcept { return t >= begin_ns && t < end_ns; }
  [[nodiscard]] std::uint64_t length() const noexcept { return empty() ? 0 : end_ns - begin_ns; }

  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct StreamHeader {
  std::uint32_t resolution_ns = 1;
  std::uint64_t duration_ns = 0;
  std::uint32_t n_runs = 0;
  std::uint8_t n_channels = 1;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

/// What to do with tags that are not ordered by (run_id, t_ns).
enum class OrderPolicy { Reject, Sort };

class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sorted photon detection record for one or more runs of an experiment.
///
/// Tags are ordered by (run_id, t_ns). Every tag satisfies t_ns < duration_ns,
/// channel < n_channels, run_id < n_runs, and t_ns is a multiple of
/// resolution_ns. The stream is immutable once constructed.
class TimeTagStream {
 public:
  TimeTagStream() : run_offsets_(1, 0) {}

  /// Validates every tag. Unsorted input is sorted under OrderPolicy::Sort
  /// (ties broken by channel) and rejected with StreamError under Reject.
  TimeTagStream(StreamHeader header, std::vector<TimeTag> tags,
                OrderPolicy policy = OrderPolicy::Reject);

  [[nodiscard]] const StreamHeader& header() const noexcept { return header_; }
  [[nodiscard]] std::uint32_t resolution_ns() const noexcept { return header_.resolution_ns; }
  [[nodiscard]] std::uint64_t duration_ns() const noexcept { return header_.duration_ns; }
  [[nodiscard]] std::uint32_t n_runs() const noexcept { return header_.n_runs; }
  [[nodiscard]] std::uint8_t n_channels() const noexcept { return header_.n_channels; }

  [[nodiscard]] std::span<const TimeTag> tags() const noexcept { return tags_; }
  [[nodiscard]] std::size_t size() const noexcept { return tags_.size(); }
  [[nodiscard]] bool empty() const noexcept { return tags_.empty(); }

  /// Tags of a single run, in time order.
  [[nodiscard]] std::span<const TimeTag> run(std::uint32_t run_id) const;

  /// Tags of a single run restricted to a time range.
  [[nodiscard]] std::span<const TimeTag> run(std::uint32_t run_id, TimeRange range) const;

  /// A stream holding only the tags of one channel (same header).
  [[nodiscard]] TimeTagStream channel(std::uint8_t ch) const;

  [[nodiscard]] std::uint64_t count_channel(std::uint8_t ch) const noexcept;

  /// Whether the stream was sorted on construction (OrderPolicy::Sort only).
  [[nodiscard]] bool was_repaired() const noexcept { return repaired_; }

  friend bool operator==(const TimeTagStream& a, const TimeTagStream& b) {
    return a.header_ == b.header_ && a.tags_ == b.tags_;
  }

 private:
  StreamHeader header_{};
  std::vector<TimeTag> tags_;
  std::vector<std::size_t> run_offsets_;
  bool repaired_ = false;
};

/// Orders tags by (run_id, t_ns, channel).
void sort_tags(std::vector<TimeTag>& tags);

}  // namespace photonstat
