#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <variant>
#include <vector>

#include "netfab/common.hpp"
#include "netfab/ipv4.hpp"
#include "netfab/l3_routing.hpp"
#include "netfab/packet.hpp"

namespace netfab {

struct Endpoint {
  Ipv4Address ip;
  std::uint16_t port = 0;

  std::string to_string() const { return ip.to_string() + ":" + std::to_string(port); }
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

struct MasqueradeScope {
  Ipv4Network destination;
  Ipv4Address external;

  friend bool operator==(const MasqueradeScope&, const MasqueradeScope&) = default;
};

struct NatEntry {
  Endpoint inside;
  Ipv4Network destination_scope;
  Endpoint outside;
  Protocol protocol = Protocol::Tcp;
  Time last_activity = 0;
};

struct FirewallConfig {
  std::uint64_t throughput_cap_bps = 170'000'000;
  std::size_t queue_limit = 256;
  std::size_t nat_capacity = 4096;
  std::size_t scope_capacity = 64;
  Time idle_timeout = 600 * kSecond;
  // Source prefixes eligible for masquerade (the DMZ side).
  std::vector<Ipv4Network> inside_prefixes;

  friend bool operator==(const FirewallConfig&, const FirewallConfig&) = default;
};

struct QueuedPacket {
  Packet packet;
  Time arrival = 0;
  int ingress_iface = 0;
};

struct FirewallForward {
  int egress_iface = 0;
  Packet packet;
  Ipv4Address next_hop;
};

using FirewallResult = std::variant<FirewallForward, Dropped>;
using NatResult = std::variant<Packet, DropReason>;

struct FirewallInterface {
  int id = 0;
  Zone zone = Zone::Dmz;
  std::vector<InterfaceAddress> addrs;
};

// Zone firewall: stateful policy, destination-scoped IP masquerade, and a
// token-bucket throughput cap in front of the forwarding path.
class Firewall {
 public:
  explicit Firewall(FirewallConfig cfg = {})
      : cfg_(std::move(cfg)), conns_(cfg_.idle_timeout) {}

  const FirewallConfig& config() const { return cfg_; }

  void add_interface(int id, Zone zone, std::vector<InterfaceAddress> addrs) {
    if (ifaces_.count(id))
      throw Error(Errc::InvalidArgument, "duplicate firewall interface " + std::to_string(id));
    for (const auto& a : addrs) routes_.insert(a.network(), Hop{id, std::nullopt});
    ifaces_.emplace(id, FirewallInterface{id, zone, std::move(addrs)});
  }

  void add_route(const Ipv4Network& prefix, Ipv4Address gateway) {
    auto ifc = attached_iface(gateway);
    if (!ifc) throw Error(Errc::InvalidRoute, "gateway " + gateway.to_string() + " not on an attached subnet");
    if (!routes_.insert(prefix, Hop{*ifc, gateway})) throw Error(Errc::DuplicateRoute, prefix.to_string());
  }

  void add_scope(const MasqueradeScope& s) {
    if (scopes_.size() >= cfg_.scope_capacity)
      throw Error(Errc::CapacityExceeded, "masquerade scope capacity " + std::to_string(cfg_.scope_capacity));
    if (!scopes_.insert(s.destination, s))
      throw Error(Errc::DuplicateRoute, "masquerade scope " + s.destination.to_string());
    externals_.insert(s.external.value);
  }

  std::vector<MasqueradeScope> scopes() const {
    std::vector<MasqueradeScope> out;
    for (auto& [net, s] : scopes_.entries()) out.push_back(s);
    return out;
  }

  // Rewrites the source of a DMZ-originated packet to the external address
  // of the scope matching its destination. Ports are allocated lowest-free
  // from 1024 per external address.
  NatResult masquerade_out(const Packet& p, Time now) {
    if (!natable(p.protocol))
      throw Error(Errc::InvalidArgument, std::string("cannot masquerade ") + to_string(p.protocol));
    if (!cfg_.inside_prefixes.empty() && !is_inside(p.src_ip))
      throw Error(Errc::InvalidArgument, p.src_ip.to_string() + " is not an inside address");
    auto scope = scopes_.lookup(p.dst_ip);
    if (!scope) return DropReason::NoScope;
    const MasqueradeScope& s = *scope->second;

    InsideKey ik{p.protocol, p.src_ip.value, nat_port(p), s.destination};
    auto it = by_inside_.find(ik);
    if (it == by_inside_.end()) {
      if (by_inside_.size() >= cfg_.nat_capacity) return count(DropReason::PoolExhausted);
      auto port = allocate(s.external);
      if (!port) return count(DropReason::PoolExhausted);
      NatEntry e{{p.src_ip, nat_port(p)}, s.destination, {s.external, *port}, p.protocol, now};
      it = by_inside_.emplace(ik, e).first;
      by_outside_.emplace(OutsideKey{s.external.value, *port, p.protocol}, ik);
    }
    it->second.last_activity = now;
    Packet out = p;
    out.src_ip = it->second.outside.ip;
    set_nat_port(out, it->second.outside.port, /*source=*/true);
    return out;
  }

  // Reverse translation of a reply addressed to an external endpoint.
  NatResult masquerade_in(const Packet& p, Time now) {
    if (!natable(p.protocol)) return count(DropReason::NoBinding);
    std::uint16_t port = has_ports(p.protocol) ? p.dst_port : p.ident;
    auto o = by_outside_.find(OutsideKey{p.dst_ip.value, port, p.protocol});
    if (o == by_outside_.end()) return count(DropReason::NoBinding);
    NatEntry& e = by_inside_.at(o->second);
    if (!e.destination_scope.contains(p.src_ip) || now - e.last_activity > cfg_.idle_timeout)
      return count(DropReason::NoBinding);
    e.last_activity = now;
    Packet out = p;
    out.dst_ip = e.inside.ip;
    set_nat_port(out, e.inside.port, /*source=*/false);
    return out;
  }

  // Returns false (and counts a drop) when the queue is full.
  bool enqueue(QueuedPacket q) {
    if (queue_.size() >= cfg_.queue_limit) {
      count(DropReason::QueueFull);
      return false;
    }
    queue_.push_back(std::move(q));
    return true;
  }

  // Adds cap x interval bits of budget and releases queued packets in FIFO
  // order while the budget covers them. Leftover budget carries over, but an
  // idle shaper holds at most one interval's worth.
  std::vector<QueuedPacket> shape(Time now, Time interval) {
    (void)now;
    if (interval <= 0) throw Error(Errc::InvalidArgument, "shape interval must be positive");
    const std::uint64_t acc = cfg_.throughput_cap_bps * static_cast<std::uint64_t>(interval) + token_rem_;
    tokens_bits_ += acc / 1'000'000;
    token_rem_ = acc % 1'000'000;

    std::vector<QueuedPacket> out;
    while (!queue_.empty()) {
      std::uint64_t bits = std::uint64_t{queue_.front().packet.network_bytes()} * 8;
      if (bits > tokens_bits_) break;
      tokens_bits_ -= bits;
      released_bytes_ += bits / 8;
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    if (queue_.empty()) {
      std::uint64_t burst = cfg_.throughput_cap_bps * static_cast<std::uint64_t>(interval) / 1'000'000;
      tokens_bits_ = std::min(tokens_bits_, burst);
    }
    return out;
  }

  void sweep_expired(Time now) {
    for (auto it = by_inside_.begin(); it != by_inside_.end();) {
      if (now - it->second.last_activity > cfg_.idle_timeout) {
        const auto& e = it->second;
        by_outside_.erase(OutsideKey{e.outside.ip.value, e.outside.port, e.protocol});
        used_ports_[e.outside.ip.value].erase(e.outside.port);
        it = by_inside_.erase(it);
      } else {
        ++it;
      }
    }
    conns_.sweep(now);
  }

  // Policy, masquerade and routing for one released packet.
  FirewallResult forward(Packet p, int ingress_iface, Time now) {
    auto in = ifaces_.find(ingress_iface);
    if (in == ifaces_.end())
      throw Error(Errc::UnknownInterface, "firewall interface " + std::to_string(ingress_iface));

    bool translated_in = false;
    if (externals_.count(p.dst_ip.value)) {
      auto r = masquerade_in(p, now);
      if (auto* reason = std::get_if<DropReason>(&r)) return Dropped{*reason};
      p = std::get<Packet>(r);
      translated_in = true;
    }

    auto hop = routes_.lookup(p.dst_ip);
    if (!hop) return Dropped{count(DropReason::NoRoute)};
    const Hop& h = *hop->second;
    Zone from = in->second.zone;
    Zone to = ifaces_.at(h.iface).zone;

    const FlowKey key = flow_key(p);
    // Path probes between balancers are infrastructure traffic, not subject to zone policy.
    if (p.protocol != Protocol::Probe) {
      AclVerdict v = policy_.verdict(from, to);
      if (v == AclVerdict::DenyNew && !conns_.established(key, now)) return Dropped{count(DropReason::Acl)};
      if (v == AclVerdict::Permit) conns_.record(key, now);
    }

    if (!translated_in && to == Zone::Public && from != Zone::Public && natable(p.protocol) &&
        is_inside(p.src_ip)) {
      auto r = masquerade_out(p, now);
      if (auto* reason = std::get_if<DropReason>(&r)) {
        if (*reason != DropReason::NoScope) return Dropped{*reason};
      } else {
        p = std::get<Packet>(r);
      }
    }
    forwarded_bytes_ += p.network_bytes();
    const Ipv4Address next_hop = h.gateway.value_or(p.dst_ip);
    return FirewallForward{h.iface, std::move(p), next_hop};
  }

  bool owns(Ipv4Address a) const {
    for (const auto& [id, ifc] : ifaces_)
      for (const auto& addr : ifc.addrs)
        if (addr.ip == a) return true;
    return false;
  }
  bool is_external(Ipv4Address a) const { return externals_.count(a.value) > 0; }

  bool is_inside(Ipv4Address a) const {
    return std::any_of(cfg_.inside_prefixes.begin(), cfg_.inside_prefixes.end(),
                       [&](const Ipv4Network& n) { return n.contains(a); });
  }

  // True when inside <-> outside is injective in both directions.
  bool nat_bijective() const {
    if (by_inside_.size() != by_outside_.size()) return false;
    std::set<std::tuple<std::uint32_t, std::uint16_t, Protocol>> outs;
    for (const auto& [ik, e] : by_inside_) {
      auto o = by_outside_.find(OutsideKey{e.outside.ip.value, e.outside.port, e.protocol});
      if (o == by_outside_.end() || !(o->second == ik)) return false;
      if (!outs.emplace(e.outside.ip.value, e.outside.port, e.protocol).second) return false;
    }
    return true;
  }

  std::vector<NatEntry> nat_entries() const {
    std::vector<NatEntry> out;
    for (const auto& [k, e] : by_inside_) out.push_back(e);
    return out;
  }
  std::size_t nat_size() const { return by_inside_.size(); }

  // Empties the shaper queue, returning what was waiting.
  std::vector<QueuedPacket> drain() {
    std::vector<QueuedPacket> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
  }

  void reset_dynamic() {
    by_inside_.clear();
    by_outside_.clear();
    used_ports_.clear();
    conns_.clear();
    queue_.clear();
    tokens_bits_ = 0;
    token_rem_ = 0;
  }

  const std::map<int, FirewallInterface>& interfaces() const { return ifaces_; }
  std::optional<int> attached_iface(Ipv4Address a) const {
    for (const auto& [id, ifc] : ifaces_)
      for (const auto& addr : ifc.addrs)
        if (addr.network().contains(a)) return id;
    return std::nullopt;
  }

  ZonePolicy& policy() { return policy_; }
  const ZonePolicy& policy() const { return policy_; }
  ConnTable& conn_table() { return conns_; }
  const ConnTable& conn_table() const { return conns_; }
  std::size_t queue_size() const { return queue_.size(); }
  std::uint64_t released_bytes() const { return released_bytes_; }
  std::uint64_t forwarded_bytes() const { return forwarded_bytes_; }
  std::uint64_t drops(DropReason r) const {
    auto it = drops_.find(r);
    return it == drops_.end() ? 0 : it->second;
  }

 private:
  struct Hop {
    int iface = 0;
    std::optional<Ipv4Address> gateway;
  };

  struct InsideKey {
    Protocol protocol;
    std::uint32_t ip;
    std::uint16_t port;
    Ipv4Network scope;
    friend auto operator<=>(const InsideKey&, const InsideKey&) = default;
  };

  struct OutsideKey {
    std::uint32_t ip;
    std::uint16_t port;
    Protocol protocol;
    friend auto operator<=>(const OutsideKey&, const OutsideKey&) = default;
  };

  static bool natable(Protocol p) {
    return p == Protocol::Tcp || p == Protocol::Udp || p == Protocol::Icmp;
  }

  // ICMP echo identifiers stand in for ports.
  static std::uint16_t nat_port(const Packet& p) { return has_ports(p.protocol) ? p.src_port : p.ident; }

  static void set_nat_port(Packet& p, std::uint16_t port, bool source) {
    if (has_ports(p.protocol)) (source ? p.src_port : p.dst_port) = port;
    else p.ident = port;
  }

  std::optional<std::uint16_t> allocate(Ipv4Address external) {
    auto& used = used_ports_[external.value];
    for (std::uint32_t port = 1024; port <= 65535; ++port) {
      if (!used.count(static_cast<std::uint16_t>(port))) {
        used.insert(static_cast<std::uint16_t>(port));
        return static_cast<std::uint16_t>(port);
      }
    }
    return std::nullopt;
  }

  DropReason count(DropReason r) {
    drops_[r]++;
    return r;
  }

  FirewallConfig cfg_;
  std::map<int, FirewallInterface> ifaces_;
  PrefixTable<Hop> routes_;
  PrefixTable<MasqueradeScope> scopes_;
  std::set<std::uint32_t> externals_;
  ZonePolicy policy_;
  ConnTable conns_;

  std::map<InsideKey, NatEntry> by_inside_;
  std::map<OutsideKey, InsideKey> by_outside_;
  std::map<std::uint32_t, std::set<std::uint16_t>> used_ports_;

  std::deque<QueuedPacket> queue_;
  std::uint64_t tokens_bits_ = 0;
  std::uint64_t token_rem_ = 0;
  std::uint64_t released_bytes_ = 0;
  std::uint64_t forwarded_bytes_ = 0;
  std::map<DropReason, std::uint64_t> drops_;
};

}  // namespace netfab
