#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netfab/common.hpp"
#include "netfab/ipv4.hpp"
#include "netfab/packet.hpp"

namespace netfab {

enum class Zone : std::uint8_t { Clean, Dmz, Public };

inline const char* to_string(Zone z) {
  switch (z) {
    case Zone::Clean: return "clean";
    case Zone::Dmz: return "dmz";
    case Zone::Public: return "public";
  }
  return "?";
}

inline std::optional<Zone> parse_zone(std::string_view s) {
  if (s == "clean") return Zone::Clean;
  if (s == "dmz") return Zone::Dmz;
  if (s == "public") return Zone::Public;
  return std::nullopt;
}

enum class AclVerdict : std::uint8_t { Permit, DenyNew };

inline const char* to_string(AclVerdict v) { return v == AclVerdict::Permit ? "permit" : "deny-new"; }

// Total verdict table over (from, to) zone pairs.
class ZonePolicy {
 public:
  ZonePolicy() {
    for (auto& row : table_) row.fill(AclVerdict::DenyNew);
    for (int z = 0; z < 3; ++z) table_[z][z] = AclVerdict::Permit;
    set(Zone::Clean, Zone::Dmz, AclVerdict::Permit);
    set(Zone::Clean, Zone::Public, AclVerdict::Permit);
    set(Zone::Dmz, Zone::Public, AclVerdict::Permit);
  }

  void set(Zone from, Zone to, AclVerdict v) { table_[idx(from)][idx(to)] = v; }
  AclVerdict verdict(Zone from, Zone to) const { return table_[idx(from)][idx(to)]; }

  friend bool operator==(const ZonePolicy&, const ZonePolicy&) = default;

 private:
  static int idx(Zone z) { return static_cast<int>(z); }
  std::array<std::array<AclVerdict, 3>, 3> table_{};
};

// Connections opened by permit-direction traffic. A packet is "established"
// when its mirrored 5-tuple was forwarded within the idle timeout.
class ConnTable {
 public:
  static constexpr Time kDefaultTimeout = 600 * kSecond;

  explicit ConnTable(Time idle_timeout = kDefaultTimeout) : timeout_(idle_timeout) {}

  void record(const FlowKey& k, Time now) { conns_[k] = now; }

  bool established(const FlowKey& reply, Time now) const {
    auto it = conns_.find(reply.reversed());
    return it != conns_.end() && now - it->second <= timeout_;
  }

  void sweep(Time now) {
    std::erase_if(conns_, [&](const auto& kv) { return now - kv.second > timeout_; });
  }

  void clear() { conns_.clear(); }
  std::size_t size() const { return conns_.size(); }
  Time timeout() const { return timeout_; }

 private:
  Time timeout_;
  std::map<FlowKey, Time> conns_;
};

struct VlanInterface {
  VlanId vid;
  Ipv4Address ip;
  int prefix_len = 24;
  Zone zone = Zone::Dmz;

  Ipv4Network network() const { return Ipv4Network(ip, prefix_len); }
};

struct Route {
  Ipv4Network prefix;
  // Attached VLAN, or a gateway inside some attached subnet.
  std::variant<VlanId, Ipv4Address> next_hop;
};

struct Forwarded {
  VlanId egress;
  Packet packet;
  Ipv4Address next_hop;
};

struct Dropped {
  DropReason reason;
};

using ForwardResult = std::variant<Forwarded, Dropped>;

// Routing core of a Layer-3 switch: VLAN interfaces, longest-prefix routes,
// and stateful zone ACLs.
class L3Switch {
 public:
  explicit L3Switch(Time conn_timeout = ConnTable::kDefaultTimeout) : conns_(conn_timeout) {}

  void add_interface(VlanId vid, Ipv4Address ip, int prefix_len, Zone zone) {
    if (ifaces_.count(vid))
      throw Error(Errc::DuplicateVid, "interface for vid " + std::to_string(vid.value()) + " exists");
    VlanInterface ifc{vid, ip, prefix_len, zone};
    for (const auto& [v, other] : ifaces_)
      if (other.network().overlaps(ifc.network()))
        throw Error(Errc::OverlappingSubnet,
                    ifc.network().to_string() + " overlaps " + other.network().to_string());
    routes_.insert(ifc.network(), Route{ifc.network(), vid});
    ifaces_.emplace(vid, ifc);
  }

  void add_route(const Ipv4Network& prefix, std::variant<VlanId, Ipv4Address> next_hop) {
    if (auto* vid = std::get_if<VlanId>(&next_hop); vid && !ifaces_.count(*vid))
      throw Error(Errc::InvalidRoute, "route via unattached vid " + std::to_string(vid->value()));
    if (auto* gw = std::get_if<Ipv4Address>(&next_hop); gw && !attached_vid(*gw))
      throw Error(Errc::InvalidRoute, "gateway " + gw->to_string() + " is not on an attached subnet");
    if (!routes_.insert(prefix, Route{prefix, next_hop}))
      throw Error(Errc::DuplicateRoute, prefix.to_string());
  }

  std::optional<Route> route_lookup(Ipv4Address dst) const {
    auto hit = routes_.lookup(dst);
    if (!hit) return std::nullopt;
    return *hit->second;
  }

  ForwardResult forward(Packet packet, VlanId ingress_vid, Time now) {
    auto in = ifaces_.find(ingress_vid);
    if (in == ifaces_.end())
      throw Error(Errc::UnknownInterface, "no interface on vid " + std::to_string(ingress_vid.value()));
    auto route = route_lookup(packet.dst_ip);
    if (!route) return drop(DropReason::NoRoute);

    VlanId egress = ingress_vid;
    Ipv4Address next_hop = packet.dst_ip;
    if (auto* vid = std::get_if<VlanId>(&route->next_hop)) {
      egress = *vid;
    } else {
      next_hop = std::get<Ipv4Address>(route->next_hop);
      egress = *attached_vid(next_hop);
    }

    const FlowKey key = flow_key(packet);
    AclVerdict v = policy_.verdict(in->second.zone, ifaces_.at(egress).zone);
    if (v == AclVerdict::DenyNew && !conns_.established(key, now)) return drop(DropReason::Acl);

    if (packet.ttl <= 1) return drop(DropReason::Ttl);
    packet.ttl--;

    if (v == AclVerdict::Permit) conns_.record(key, now);
    return Forwarded{egress, std::move(packet), next_hop};
  }

  std::optional<VlanId> attached_vid(Ipv4Address a) const {
    for (const auto& [vid, ifc] : ifaces_)
      if (ifc.network().contains(a)) return vid;
    return std::nullopt;
  }

  const VlanInterface* interface(VlanId vid) const {
    auto it = ifaces_.find(vid);
    return it == ifaces_.end() ? nullptr : &it->second;
  }
  const std::map<VlanId, VlanInterface>& interfaces() const { return ifaces_; }
  std::vector<Route> routes() const {
    std::vector<Route> out;
    for (auto& [net, r] : routes_.entries()) out.push_back(r);
    return out;
  }

  ZonePolicy& policy() { return policy_; }
  const ZonePolicy& policy() const { return policy_; }
  ConnTable& conn_table() { return conns_; }
  const ConnTable& conn_table() const { return conns_; }

  std::uint64_t drops(DropReason r) const {
    auto it = drops_.find(r);
    return it == drops_.end() ? 0 : it->second;
  }

 private:
  Dropped drop(DropReason r) {
    drops_[r]++;
    return Dropped{r};
  }

  std::map<VlanId, VlanInterface> ifaces_;
  PrefixTable<Route> routes_;
  ZonePolicy policy_;
  ConnTable conns_;
  std::map<DropReason, std::uint64_t> drops_;
};

}  // namespace netfab
