#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netfab/common.hpp"
#include "netfab/firewall_nat.hpp"
#include "netfab/ipv4.hpp"
#include "netfab/l2_fabric.hpp"
#include "netfab/l3_routing.hpp"
#include "netfab/link.hpp"
#include "netfab/packet.hpp"
#include "netfab/resilience.hpp"

namespace netfab {

enum class VlanKind : std::uint8_t { Beamline, Management, Staff, Clean, Transit, Public, Other };

inline const char* to_string(VlanKind k) {
  switch (k) {
    case VlanKind::Beamline: return "beamline";
    case VlanKind::Management: return "mgmt";
    case VlanKind::Staff: return "staff";
    case VlanKind::Clean: return "clean";
    case VlanKind::Transit: return "transit";
    case VlanKind::Public: return "public";
    case VlanKind::Other: return "other";
  }
  return "?";
}

inline std::optional<VlanKind> parse_vlan_kind(std::string_view s) {
  for (auto k : {VlanKind::Beamline, VlanKind::Management, VlanKind::Staff, VlanKind::Clean,
                 VlanKind::Transit, VlanKind::Public, VlanKind::Other})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct VlanDecl {
  VlanId vid{1};
  std::string name;
  VlanKind kind = VlanKind::Other;
  friend bool operator==(const VlanDecl&, const VlanDecl&) = default;
};

struct SwitchDecl {
  std::string id;
  bool layer3 = false;
  Time fdb_aging = Switch::kDefaultAging;
  friend bool operator==(const SwitchDecl&, const SwitchDecl&) = default;
};

struct PortDecl {
  std::string node;
  int port = 0;
  PortMode mode = AccessMode{VlanId(1)};
  std::optional<int> lag;
  friend bool operator==(const PortDecl&, const PortDecl&) = default;
};

// Router interface. L3 switches declare VLAN interfaces (vid); firewalls,
// balancers declare port interfaces. Balancer path interfaces also name the
// firewall next hop and the peer balancer reached through it.
struct InterfaceDecl {
  std::string node;
  std::optional<int> port;
  std::optional<VlanId> vid;
  std::vector<InterfaceAddress> addrs;
  Zone zone = Zone::Dmz;
  std::optional<int> path;
  std::optional<Ipv4Address> next_hop;
  std::optional<Ipv4Address> peer;
  friend bool operator==(const InterfaceDecl&, const InterfaceDecl&) = default;
};

struct FirewallDecl {
  std::string id;
  FirewallConfig config;
  friend bool operator==(const FirewallDecl&, const FirewallDecl&) = default;
};

struct BalancerDecl {
  std::string id;
  BalancerConfig config;
  friend bool operator==(const BalancerDecl&, const BalancerDecl&) = default;
};

struct HostDecl {
  std::string id;
  InterfaceAddress addr;
  std::optional<Ipv4Address> gateway;
  std::string beamline;
  std::optional<MacAddress> mac;
  friend bool operator==(const HostDecl&, const HostDecl&) = default;
};

struct PortRef {
  std::string node;
  int port = 0;
  std::string to_string() const { return node + ":" + std::to_string(port); }
  friend bool operator==(const PortRef&, const PortRef&) = default;
};

struct LinkDecl {
  std::string id;
  PortRef a;
  PortRef b;
  std::uint64_t bandwidth = 100'000'000;
  Time propagation = Link::kDefaultPropagation;
  friend bool operator==(const LinkDecl&, const LinkDecl&) = default;
};

struct Balanced {
  friend bool operator==(const Balanced&, const Balanced&) = default;
};

struct RouteDecl {
  std::string node;
  Ipv4Network prefix;
  std::variant<VlanId, Ipv4Address, Balanced> via = Ipv4Address();
  friend bool operator==(const RouteDecl&, const RouteDecl&) = default;
};

struct AclDecl {
  std::string node;
  Zone from = Zone::Public;
  Zone to = Zone::Dmz;
  AclVerdict verdict = AclVerdict::DenyNew;
  friend bool operator==(const AclDecl&, const AclDecl&) = default;
};

struct MasqueradeDecl {
  std::string node;
  Ipv4Network scope;
  Ipv4Address external;
  friend bool operator==(const MasqueradeDecl&, const MasqueradeDecl&) = default;
};

enum class TrafficKind : std::uint8_t { Cbr, Bulk, Ping };

inline const char* to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::Cbr: return "cbr";
    case TrafficKind::Bulk: return "bulk";
    case TrafficKind::Ping: return "ping";
  }
  return "?";
}

struct TrafficDecl {
  std::string id;
  TrafficKind kind = TrafficKind::Cbr;
  std::string src;
  std::string dst;
  std::uint64_t rate_bps = 0;       // cbr
  std::uint32_t packet_bytes = 1500;  // cbr: IP datagram size
  std::uint64_t total_bytes = 0;    // bulk: application bytes
  std::uint32_t count = 0;          // ping
  Time interval = kSecond;          // ping
  Time start = 0;
  std::optional<Time> stop;
  friend bool operator==(const TrafficDecl&, const TrafficDecl&) = default;
};

enum class FaultAction : std::uint8_t { FailNode, FailLink, Recover };

inline const char* to_string(FaultAction a) {
  switch (a) {
    case FaultAction::FailNode: return "fail_node";
    case FaultAction::FailLink: return "fail_link";
    case FaultAction::Recover: return "recover";
  }
  return "?";
}

inline std::optional<FaultAction> parse_fault_action(std::string_view s) {
  if (s == "fail_node") return FaultAction::FailNode;
  if (s == "fail_link") return FaultAction::FailLink;
  if (s == "recover") return FaultAction::Recover;
  return std::nullopt;
}

struct FaultDecl {
  Time at = 0;
  FaultAction action = FaultAction::FailNode;
  std::string target;
  friend bool operator==(const FaultDecl&, const FaultDecl&) = default;
};

struct EngineDecl {
  std::uint64_t seed = 1;
  Time duration = 10 * kSecond;
  // Host whose reachability defines "affected" in status reports.
  std::optional<std::string> probe_target;
  Time shape_interval = kMillisecond;
  Time age_interval = kSecond;
  friend bool operator==(const EngineDecl&, const EngineDecl&) = default;
};

struct ScenarioConfig {
  std::string name;
  EngineDecl engine;
  std::vector<VlanDecl> vlans;
  std::vector<SwitchDecl> switches;
  std::vector<PortDecl> ports;
  std::vector<InterfaceDecl> interfaces;
  std::vector<FirewallDecl> firewalls;
  std::vector<BalancerDecl> balancers;
  std::vector<HostDecl> hosts;
  std::vector<LinkDecl> links;
  std::vector<RouteDecl> routes;
  std::vector<AclDecl> acls;
  std::vector<MasqueradeDecl> masquerades;
  std::vector<TrafficDecl> traffic;
  std::vector<FaultDecl> faults;

  // VLAN segments that belong to the experimental-user LAN.
  std::size_t user_lan_segments() const {
    std::size_t n = 0;
    for (const auto& v : vlans)
      n += v.kind == VlanKind::Beamline || v.kind == VlanKind::Management || v.kind == VlanKind::Staff;
    return n;
  }

  const HostDecl* find_host(std::string_view id) const {
    for (const auto& h : hosts)
      if (h.id == id) return &h;
    return nullptr;
  }
  const VlanDecl* find_vlan(VlanId vid) const {
    for (const auto& v : vlans)
      if (v.vid == vid) return &v;
    return nullptr;
  }
  const VlanDecl* find_vlan(std::string_view name) const {
    for (const auto& v : vlans)
      if (v.name == name) return &v;
    return nullptr;
  }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& reason)
      : Error(Errc::Parse, "line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}
  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& reference, const std::string& reason)
      : Error(Errc::Validation, reference + ": " + reason), reference_(reference) {}
  const std::string& reference() const { return reference_; }

 private:
  std::string reference_;
};

class LoopError : public Error {
 public:
  LoopError(VlanId vid, std::vector<std::string> cycle)
      : Error(Errc::Loop, "vlan " + std::to_string(vid.value()) + " has a cycle: " + join(cycle)),
        vid_(vid), cycle_(std::move(cycle)) {}
  VlanId vid() const { return vid_; }
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  static std::string join(const std::vector<std::string>& c) {
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " -> " : "") + c[i];
    return s;
  }
  VlanId vid_;
  std::vector<std::string> cycle_;
};

}  // namespace netfab
