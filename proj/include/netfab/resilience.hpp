#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netfab/common.hpp"
#include "netfab/l2_fabric.hpp"
#include "netfab/packet.hpp"

namespace netfab {

enum class PathState : std::uint8_t { Up, Down };

inline const char* to_string(PathState s) { return s == PathState::Up ? "up" : "down"; }

// Paths are numbered 0 and 1 (fw1 and fw2).
inline std::string path_name(int path) { return "fw" + std::to_string(path + 1); }

struct PathHealth {
  int path_id = 0;
  int consecutive_missed = 0;
  int consecutive_replies = 0;
  PathState state = PathState::Up;
  bool awaiting_reply = false;
  Time last_probe_sent = std::numeric_limits<Time>::min();
  Time last_reply = std::numeric_limits<Time>::min();
};

struct BalancerConfig {
  Time probe_interval = kSecond;
  int down_threshold = 3;
  int up_threshold = 2;

  friend bool operator==(const BalancerConfig&, const BalancerConfig&) = default;
};

struct ProbeRequest {
  int path = 0;
  std::uint16_t seq = 0;
};

struct PathTransition {
  Time at = 0;
  int path = 0;
  PathState state = PathState::Up;
};

// One load balancer in front of (or behind) the firewall pair. Health is
// driven by probes sent once per interval per path; a probe that saw no
// reply by the next tick counts as a miss.
class LoadBalancer {
 public:
  static constexpr int kPaths = 2;

  explicit LoadBalancer(BalancerConfig cfg = {}, std::uint64_t hash_salt = 0)
      : cfg_(cfg), salt_(hash_salt) {
    if (cfg_.probe_interval <= 0 || cfg_.down_threshold < 1 || cfg_.up_threshold < 1)
      throw Error(Errc::InvalidArgument, "balancer interval and thresholds must be positive");
    for (int i = 0; i < kPaths; ++i) paths_[i].path_id = i;
  }

  const BalancerConfig& config() const { return cfg_; }

  std::vector<ProbeRequest> probe_tick(Time now) {
    std::vector<ProbeRequest> out;
    for (auto& p : paths_) {
      if (p.last_probe_sent != std::numeric_limits<Time>::min() &&
          now < p.last_probe_sent + cfg_.probe_interval)
        continue;
      if (p.awaiting_reply) {
        p.consecutive_missed++;
        p.consecutive_replies = 0;
        if (p.state == PathState::Up && p.consecutive_missed >= cfg_.down_threshold)
          transition(p, PathState::Down, now);
      }
      p.awaiting_reply = true;
      p.last_probe_sent = now;
      out.push_back({p.path_id, ++seq_});
    }
    return out;
  }

  void on_probe_reply(int path, Time now) {
    if (path < 0 || path >= kPaths) throw Error(Errc::UnknownPath, "path " + std::to_string(path));
    auto& p = paths_[path];
    p.awaiting_reply = false;
    p.consecutive_missed = 0;
    p.consecutive_replies++;
    p.last_reply = now;
    if (p.state == PathState::Down && p.consecutive_replies >= cfg_.up_threshold)
      transition(p, PathState::Up, now);
  }

  // Path for a packet of this flow, or nullopt when both paths are down
  // (Unavailable). Affinity sticks while its path is up.
  std::optional<int> dispatch(const FlowKey& key) {
    auto it = affinity_.find(key);
    if (it != affinity_.end() && paths_[it->second].state == PathState::Up) return it->second;
    std::array<LagMember, kPaths> members;
    bool any = false;
    for (int i = 0; i < kPaths; ++i) {
      members[i] = {i, paths_[i].state == PathState::Up};
      any = any || members[i].live;
    }
    if (!any) {
      unavailable_++;
      return std::nullopt;
    }
    int path = lag_select(members, key, salt_);
    affinity_[key] = path;
    return path;
  }

  // Records that `key` is carried by `path` (learned from the reverse direction).
  void pin(const FlowKey& key, int path) {
    if (path < 0 || path >= kPaths) throw Error(Errc::UnknownPath, "path " + std::to_string(path));
    if (paths_[path].state == PathState::Up) affinity_[key] = path;
  }

  std::optional<int> affinity(const FlowKey& key) const {
    auto it = affinity_.find(key);
    if (it == affinity_.end()) return std::nullopt;
    return it->second;
  }

  void reset() {
    for (int i = 0; i < kPaths; ++i) paths_[i] = PathHealth{i};
    affinity_.clear();
  }

  const PathHealth& path(int i) const {
    if (i < 0 || i >= kPaths) throw Error(Errc::UnknownPath, "path " + std::to_string(i));
    return paths_[i];
  }
  const std::vector<PathTransition>& transitions() const { return transitions_; }
  std::uint64_t unavailable_count() const { return unavailable_; }
  std::size_t affinity_size() const { return affinity_.size(); }

 private:
  void transition(PathHealth& p, PathState s, Time now) {
    p.state = s;
    transitions_.push_back({now, p.path_id, s});
  }

  BalancerConfig cfg_;
  std::uint64_t salt_;
  std::array<PathHealth, kPaths> paths_{};
  std::map<FlowKey, int> affinity_;
  std::vector<PathTransition> transitions_;
  std::uint64_t unavailable_ = 0;
  std::uint16_t seq_ = 0;
};

}  // namespace netfab
