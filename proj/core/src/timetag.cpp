#include "photonstat/timetag.hpp"

#include <algorithm>
#include <sstream>

namespace photonstat {
namespace {

bool tag_order(const TimeTag& a, const TimeTag& b) {
  if (a.run_id != b.run_id) return a.run_id < b.run_id;
  if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
  return a.channel < b.channel;
}

// Order required by the stream invariant; channel ties are allowed in any order.
bool out_of_order(const TimeTag& prev, const TimeTag& next) {
  return next.run_id < prev.run_id || (next.run_id == prev.run_id && next.t_ns < prev.t_ns);
}

}  // namespace

void sort_tags(std::vector<TimeTag>& tags) { std::sort(tags.begin(), tags.end(), tag_order); }

TimeTagStream::TimeTagStream(StreamHeader header, std::vector<TimeTag> tags, OrderPolicy policy)
    : header_(header), tags_(std::move(tags)) {
  if (header_.resolution_ns == 0) throw StreamError("resolution_ns must be positive");
  if (header_.n_channels == 0 || header_.n_channels > 2) {
    throw StreamError("n_channels must be 1 or 2");
  }

  for (std::size_t i = 0; i < tags_.size(); ++i) {
    const TimeTag& t = tags_[i];
    std::ostringstream why;
    if (t.run_id >= header_.n_runs) {
      why << "tag " << i << ": run_id " << t.run_id << " >= n_runs " << header_.n_runs;
    } else if (t.channel >= header_.n_channels) {
      why << "tag " << i << ": channel " << int(t.channel) << " >= n_channels "
          << int(header_.n_channels);
    } else if (t.t_ns >= header_.duration_ns) {
      why << "tag " << i << ": t_ns " << t.t_ns << " >= duration_ns " << header_.duration_ns;
    } else if (t.t_ns % header_.resolution_ns != 0) {
      why << "tag " << i << ": t_ns " << t.t_ns << " not a multiple of resolution "
          << header_.resolution_ns;
    }
    if (!why.str().empty()) throw StreamError(why.str());
  }

  const auto unsorted = std::adjacent_find(tags_.begin(), tags_.end(), out_of_order);
  if (unsorted != tags_.end()) {
    if (policy == OrderPolicy::Reject) {
      std::ostringstream why;
      why << "tags not sorted by (run_id, t_ns) at index " << (unsorted - tags_.begin() + 1);
      throw StreamError(why.str());
    }
    sort_tags(tags_);
    repaired_ = true;
  }

  run_offsets_.assign(header_.n_runs + 1, tags_.size());
  std::size_t i = 0;
  for (std::uint32_t r = 0; r < header_.n_runs; ++r) {
    run_offsets_[r] = i;
    while (i < tags_.size() && tags_[i].run_id == r) ++i;
  }
  run_offsets_[header_.n_runs] = tags_.size();
}

std::span<const TimeTag> TimeTagStream::run(std::uint32_t run_id) const {
  if (run_id >= header_.n_runs) throw std::out_of_range("run_id out of range");
  return std::span<const TimeTag>(tags_).subspan(run_offsets_[run_id],
                                                  run_offsets_[run_id + 1] - run_offsets_[run_id]);
}

std::span<const TimeTag> TimeTagStream::run(std::uint32_t run_id, TimeRange range) const {
  const auto all = run(run_id);
  const auto by_time = [](const TimeTag& tag, std::uint64_t t) { return tag.t_ns < t; };
  const auto lo = std::lower_bound(all.begin(), all.end(), range.begin_ns, by_time);
  const auto hi = std::lower_bound(lo, all.end(), range.end_ns, by_time);
  return {lo, hi};
}

TimeTagStream TimeTagStream::channel(std::uint8_t ch) const {
  std::vector<TimeTag> kept;
  kept.reserve(count_channel(ch));
  std::copy_if(tags_.begin(), tags_.end(), std::back_inserter(kept),
               [ch](const TimeTag& t) { return t.channel == ch; });
  return TimeTagStream(header_, std::move(kept));
}

std::uint64_t TimeTagStream::count_channel(std::uint8_t ch) const noexcept {
  return static_cast<std::uint64_t>(
      std::count_if(tags_.begin(), tags_.end(), [ch](const TimeTag& t) { return t.channel == ch; }));
}

}  // namespace photonstat
