#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "netfab/common.hpp"
#include "netfab/packet.hpp"

namespace netfab {

struct AccessMode {
  VlanId vid;
  friend bool operator==(const AccessMode&, const AccessMode&) = default;
};

struct TrunkMode {
  std::set<VlanId> allowed;
  friend bool operator==(const TrunkMode&, const TrunkMode&) = default;
};

using PortMode = std::variant<AccessMode, TrunkMode>;

inline bool is_member(const PortMode& mode, VlanId vid) {
  if (auto* a = std::get_if<AccessMode>(&mode)) return a->vid == vid;
  return std::get<TrunkMode>(mode).allowed.count(vid) > 0;
}

inline bool is_trunk(const PortMode& mode) { return std::holds_alternative<TrunkMode>(mode); }

struct PortConfig {
  int port_id = 0;
  PortMode mode = AccessMode{VlanId(1)};
  bool link_up = true;
  std::optional<int> lag_group;
};

struct FdbEntry {
  VlanId vlan;
  MacAddress mac;
  int port = 0;
  Time last_seen = 0;
  bool is_static = false;
};

struct PortCounters {
  std::uint64_t rx_frames = 0;
  std::uint64_t rx_bytes = 0;
  std::uint64_t tx_frames = 0;
  std::uint64_t tx_bytes = 0;
  std::uint64_t drop_frames = 0;
  std::uint64_t drop_bytes = 0;
};

struct Emission {
  int port = 0;
  Frame frame;
};

struct LagMember {
  int port_id = 0;
  bool live = true;
};

// Picks the group member for a flow. The digest is taken modulo the full
// member count (ordered by port id); only when that member is dead is the
// flow rehashed over the live members, so a failure remaps only its flows.
inline int lag_select(std::span<const LagMember> members, const FlowKey& key,
                      std::uint64_t salt = 0) {
  std::vector<LagMember> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LagMember& a, const LagMember& b) { return a.port_id < b.port_id; });
  std::vector<int> live;
  for (const auto& m : sorted)
    if (m.live) live.push_back(m.port_id);
  if (live.empty()) throw Error(Errc::NoLiveMember, "no live member in group");
  std::uint64_t h = flow_digest(key, salt);
  const auto& first = sorted[h % sorted.size()];
  if (first.live) return first.port_id;
  return live[mix64(h) % live.size()];
}

// A MAC-learning 802.1Q bridge.
class Switch {
 public:
  static constexpr Time kDefaultAging = 300 * kSecond;

  explicit Switch(Time fdb_aging = kDefaultAging) : fdb_aging_(fdb_aging) {}

  void add_port(PortConfig cfg) {
    check_mode(cfg.mode);
    if (ports_.count(cfg.port_id))
      throw Error(Errc::InvalidArgument, "duplicate port " + std::to_string(cfg.port_id));
    if (cfg.lag_group) {
      for (const auto& [id, p] : ports_)
        if (p.lag_group == cfg.lag_group && !(p.mode == cfg.mode))
          throw Error(Errc::InvalidArgument, "lag group members must share a mode");
    }
    counters_[cfg.port_id];
    ports_.emplace(cfg.port_id, std::move(cfg));
  }

  // Replaces the port's mode (and its LAG peers' modes), purging learned
  // entries that point at the port in VLANs it no longer carries.
  void configure_port(int port_id, PortMode mode) {
    auto& cfg = port_mut(port_id);
    check_mode(mode);
    std::vector<int> targets{port_id};
    if (cfg.lag_group) {
      for (const auto& [id, p] : ports_)
        if (id != port_id && p.lag_group == cfg.lag_group) targets.push_back(id);
    }
    for (int id : targets) {
      ports_.at(id).mode = mode;
      std::erase_if(fdb_, [&](const auto& kv) {
        return kv.second.port == id && !is_member(mode, kv.second.vlan);
      });
    }
  }

  void set_link(int port_id, bool up) {
    port_mut(port_id).link_up = up;
    if (!up) {
      std::erase_if(fdb_, [&](const auto& kv) {
        return kv.second.port == port_id && !kv.second.is_static;
      });
    }
  }

  void add_static_entry(VlanId vlan, MacAddress mac, int port) {
    port_mut(port);
    fdb_.insert_or_assign(std::make_pair(vlan, mac), FdbEntry{vlan, mac, port, 0, true});
  }

  std::vector<Emission> ingress(int port_id, const Frame& frame, Time now) {
    auto& in = port_mut(port_id);
    auto& rx = counters_[port_id];
    rx.rx_frames++;
    rx.rx_bytes += frame.size_bytes;
    if (!in.link_up) {
      count_drop(port_id, frame);
      throw Error(Errc::LinkDown, "ingress on port " + std::to_string(port_id) + " with link down");
    }

    std::optional<VlanId> vid;
    if (auto* a = std::get_if<AccessMode>(&in.mode)) {
      if (!frame.tag) vid = a->vid;
    } else if (frame.tag && is_member(in.mode, frame.tag->vid)) {
      vid = frame.tag->vid;
    }
    if (!vid) {
      count_drop(port_id, frame);
      return {};
    }

    if (!frame.src.is_multicast()) {
      FdbEntry learned{*vid, frame.src, port_id, now, false};
      auto it = fdb_.find({*vid, frame.src});
      if (it == fdb_.end()) fdb_.emplace(std::make_pair(*vid, frame.src), learned);
      else if (!it->second.is_static) it->second = learned;
    }

    const int pcp = frame.tag ? frame.tag->pcp : 0;
    std::vector<int> out;
    const FlowKey key = frame_key(frame);

    auto known = classify_dst(frame) == DstClass::Unicast ? fdb_.find({*vid, frame.dst}) : fdb_.end();
    if (known != fdb_.end() && ports_.at(known->second.port).link_up) {
      const auto& target = ports_.at(known->second.port);
      if (target.port_id == port_id || (in.lag_group && target.lag_group == in.lag_group))
        return {};
      out.push_back(target.lag_group ? select_in_group(*target.lag_group, *vid, key)
                                     : target.port_id);
    } else {
      std::set<int> groups_done;
      for (const auto& [id, p] : ports_) {
        if (id == port_id || !p.link_up || !is_member(p.mode, *vid)) continue;
        if (p.lag_group) {
          if (p.lag_group == in.lag_group) continue;
          if (!groups_done.insert(*p.lag_group).second) continue;
          out.push_back(select_in_group(*p.lag_group, *vid, key));
        } else {
          out.push_back(id);
        }
      }
      std::sort(out.begin(), out.end());
    }

    std::vector<Emission> emissions;
    emissions.reserve(out.size());
    Frame untagged = frame.tag ? pop_tag(frame).first : frame;
    for (int id : out) {
      const auto& p = ports_.at(id);
      Frame f = is_trunk(p.mode) ? push_tag(untagged, *vid, pcp) : untagged;
      auto& c = counters_[id];
      c.tx_frames++;
      c.tx_bytes += f.size_bytes;
      emissions.push_back({id, std::move(f)});
    }
    return emissions;
  }

  // Removes dynamic entries with now - last_seen > aging.
  void age_fdb(Time now) {
    std::erase_if(fdb_, [&](const auto& kv) {
      return !kv.second.is_static && now - kv.second.last_seen > fdb_aging_;
    });
  }

  void clear_dynamic() {
    std::erase_if(fdb_, [](const auto& kv) { return !kv.second.is_static; });
  }

  std::optional<int> lookup(VlanId vid, MacAddress mac) const {
    auto it = fdb_.find({vid, mac});
    if (it == fdb_.end()) return std::nullopt;
    return it->second.port;
  }

  bool has_port(int id) const { return ports_.count(id) > 0; }
  const PortConfig& port(int id) const {
    auto it = ports_.find(id);
    if (it == ports_.end()) throw Error(Errc::UnknownPort, "port " + std::to_string(id));
    return it->second;
  }
  const std::map<int, PortConfig>& ports() const { return ports_; }
  const PortCounters& counters(int id) const {
    port(id);
    return counters_.at(id);
  }

  std::vector<FdbEntry> fdb() const {
    std::vector<FdbEntry> out;
    for (const auto& [k, e] : fdb_) out.push_back(e);
    return out;
  }
  std::size_t fdb_size() const { return fdb_.size(); }
  Time fdb_aging() const { return fdb_aging_; }

  void set_hash_salt(std::uint64_t salt) { salt_ = salt; }

 private:
  static void check_mode(const PortMode& mode) {
    if (auto* t = std::get_if<TrunkMode>(&mode); t && t->allowed.empty())
      throw Error(Errc::InvalidVid, "trunk with an empty allowed set");
  }

  PortConfig& port_mut(int id) {
    auto it = ports_.find(id);
    if (it == ports_.end()) throw Error(Errc::UnknownPort, "port " + std::to_string(id));
    return it->second;
  }

  int select_in_group(int group, VlanId vid, const FlowKey& key) const {
    std::vector<LagMember> members;
    for (const auto& [id, p] : ports_)
      if (p.lag_group == group && is_member(p.mode, vid)) members.push_back({id, p.link_up});
    return lag_select(members, key, salt_);
  }

  void count_drop(int port_id, const Frame& f) {
    auto& c = counters_[port_id];
    c.drop_frames++;
    c.drop_bytes += f.size_bytes;
  }

  Time fdb_aging_;
  std::uint64_t salt_ = 0;
  std::map<int, PortConfig> ports_;
  std::map<std::pair<VlanId, MacAddress>, FdbEntry> fdb_;
  std::map<int, PortCounters> counters_;
};

}  // namespace netfab
