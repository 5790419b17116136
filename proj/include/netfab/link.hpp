#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <variant>

#include "netfab/common.hpp"
#include "netfab/packet.hpp"

namespace netfab {

struct LinkDirectionStats {
  std::uint64_t frames = 0;
  std::uint64_t bytes = 0;
  std::uint64_t drops = 0;
};

// Full-duplex point-to-point link. Each direction serializes frames FIFO
// behind a drop-tail queue; the transmitter clock runs in nanoseconds so
// rounding never lets a link exceed its bandwidth.
class Link {
 public:
  static constexpr Time kDefaultPropagation = 5 * kMicrosecond;
  static constexpr std::size_t kDefaultQueue = 256;

  explicit Link(std::uint64_t bandwidth_bps, Time propagation = kDefaultPropagation,
                std::size_t queue_limit = kDefaultQueue)
      : bandwidth_(bandwidth_bps), propagation_(propagation), queue_limit_(queue_limit) {
    if (bandwidth_bps == 0) throw Error(Errc::InvalidArgument, "link bandwidth must be positive");
  }

  static std::int64_t serialization_ns(std::uint32_t size_bytes, std::uint64_t bandwidth_bps) {
    const unsigned __int128 bits_ns = static_cast<unsigned __int128>(size_bytes) * 8 * 1'000'000'000ULL;
    return static_cast<std::int64_t>((bits_ns + bandwidth_bps - 1) / bandwidth_bps);
  }

  // Delivery time at the far end of `direction` (0: a->b, 1: b->a), or the
  // reason the frame was dropped.
  std::variant<Time, DropReason> transmit(int direction, const Frame& frame, Time now) {
    auto& d = dirs_[direction & 1];
    if (!up_) {
      d.stats.drops++;
      return DropReason::LinkDown;
    }
    const std::int64_t now_ns = now * 1000;
    while (!d.finish_ns.empty() && d.finish_ns.front() <= now_ns) d.finish_ns.pop_front();
    if (d.finish_ns.size() >= queue_limit_) {
      d.stats.drops++;
      return DropReason::QueueFull;
    }
    const std::int64_t start = std::max(now_ns, d.busy_until_ns);
    d.busy_until_ns = start + serialization_ns(frame.size_bytes, bandwidth_);
    d.finish_ns.push_back(d.busy_until_ns);
    d.stats.frames++;
    d.stats.bytes += frame.size_bytes;
    return (d.busy_until_ns + 999) / 1000 + propagation_;
  }

  void set_up(bool up) {
    up_ = up;
    if (!up) {
      for (auto& d : dirs_) {
        d.finish_ns.clear();
        d.busy_until_ns = 0;
      }
    }
  }

  bool up() const { return up_; }
  std::uint64_t bandwidth() const { return bandwidth_; }
  Time propagation() const { return propagation_; }
  std::size_t queue_limit() const { return queue_limit_; }
  const LinkDirectionStats& stats(int direction) const { return dirs_[direction & 1].stats; }
  std::size_t backlog(int direction, Time now) const {
    std::size_t n = 0;
    for (auto f : dirs_[direction & 1].finish_ns) n += f > now * 1000;
    return n;
  }

 private:
  struct Direction {
    std::int64_t busy_until_ns = 0;
    std::deque<std::int64_t> finish_ns;
    LinkDirectionStats stats;
  };

  std::uint64_t bandwidth_;
  Time propagation_;
  std::size_t queue_limit_;
  bool up_ = true;
  std::array<Direction, 2> dirs_{};
};

// Ideal lower bound on moving `total_bytes` through a `rate_cap_bps` bottleneck, in seconds.
inline double bulk_transfer_time(std::uint64_t rate_cap_bps, std::uint64_t total_bytes) {
  if (rate_cap_bps == 0) throw Error(Errc::InvalidArgument, "rate cap must be positive");
  return static_cast<double>(total_bytes) * 8.0 / static_cast<double>(rate_cap_bps);
}

}  // namespace netfab
