#pragma once

#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "netfab/scenario.hpp"

namespace netfab {

// Static forwarding walk over a scenario: VLAN-consistent bridging inside
// each broadcast domain, then next-hop resolution through routers. Ignores
// ACLs, NAT and queueing; answers "is there a working path" under a set of
// failed nodes and links.
class Reachability {
 public:
  explicit Reachability(const ScenarioConfig& c, std::set<std::string> failed_nodes = {},
                        std::set<std::string> failed_links = {})
      : cfg_(c), failed_nodes_(std::move(failed_nodes)), failed_links_(std::move(failed_links)) {
    for (const auto& s : c.switches) kind_[s.id] = s.layer3 ? Kind::L3 : Kind::Switch;
    for (const auto& f : c.firewalls) kind_[f.id] = Kind::Router;
    for (const auto& b : c.balancers) kind_[b.id] = Kind::Router;
    for (const auto& h : c.hosts) kind_[h.id] = Kind::Host;
    for (const auto& p : c.ports) {
      ports_[{p.node, p.port}] = &p;
      ports_by_node_[p.node].push_back(&p);
    }
    for (const auto& l : c.links) {
      if (failed_links_.count(l.id)) continue;
      peer_[{l.a.node, l.a.port}] = {l.b.node, l.b.port};
      peer_[{l.b.node, l.b.port}] = {l.a.node, l.a.port};
    }
    for (const auto& i : c.interfaces) {
      Iface f;
      f.node = i.node;
      f.key = i.port ? *i.port : i.vid->value();
      f.addrs = i.addrs;
      f.path = i.path;
      f.next_hop = i.next_hop;
      ifaces_[i.node].push_back(f);
    }
    for (const auto& h : c.hosts) ifaces_[h.id].push_back(Iface{h.id, 0, {h.addr}, std::nullopt, std::nullopt});
    for (const auto& r : c.routes) routes_[r.node].push_back(&r);
  }

  // True when a packet from `host` to `target` has a working forward path.
  bool reaches(const std::string& host, Ipv4Address target) const {
    const HostDecl* h = cfg_.find_host(host);
    if (!h || down(host)) return false;
    if (h->addr.ip == target) return true;
    Ipv4Address nh = target;
    if (!h->addr.network().contains(target)) {
      if (!h->gateway) return false;
      nh = *h->gateway;
    }
    return walk(Attach{host, 0}, nh, target, 0);
  }

 private:
  enum class Kind { Switch, L3, Router, Host };

  struct Iface {
    std::string node;
    int key = 0;  // port, or vid for L3 VLAN interfaces
    std::vector<InterfaceAddress> addrs;
    std::optional<int> path;
    std::optional<Ipv4Address> next_hop;
  };

  // An attachment point into a broadcast domain: a node port, or an L3
  // switch's routing engine on a VLAN (port = -vid).
  struct Attach {
    std::string node;
    int port = 0;
    friend auto operator<=>(const Attach&, const Attach&) = default;
  };

  bool down(const std::string& n) const { return failed_nodes_.count(n) > 0; }

  Kind kind(const std::string& n) const { return kind_.at(n); }

  // Endpoints reachable in the broadcast domain entered at `from`.
  std::vector<Attach> domain(const Attach& from) const {
    if (from.port < 0) return bridge_domain(from.node, -from.port);
    auto p = peer_.find({from.node, from.port});
    if (p == peer_.end()) return {};
    const auto& [node, port] = p->second;
    if (down(node)) return {};
    Kind k = kind(node);
    if (k != Kind::Switch && k != Kind::L3) return {Attach{node, port}};
    auto pit = ports_.find({node, port});
    if (pit == ports_.end()) return {};
    auto* a = std::get_if<AccessMode>(&pit->second->mode);
    if (!a) return {};
    return bridge_domain(node, a->vid.value());
  }

  // Breadth-first over (bridge, vid) states, honouring access/trunk tagging
  // at both ends of every link.
  const std::vector<Attach>& bridge_domain(const std::string& start, int start_vid) const {
    auto cached = domains_.find({start, start_vid});
    if (cached != domains_.end()) return cached->second;

    std::vector<Attach> out;
    std::set<std::pair<std::string, int>> seen{{start, start_vid}};
    std::queue<std::pair<std::string, int>> q;
    if (!down(start)) q.push({start, start_vid});
    while (!q.empty()) {
      auto [sw, vid] = q.front();
      q.pop();
      if (kind(sw) == Kind::L3) out.push_back({sw, -vid});
      auto bp = ports_by_node_.find(sw);
      if (bp == ports_by_node_.end()) continue;
      for (const PortDecl* pd : bp->second) {
        if (!is_member(pd->mode, VlanId(vid))) continue;
        auto p = peer_.find({sw, pd->port});
        if (p == peer_.end()) continue;
        const auto& [node, port] = p->second;
        if (down(node)) continue;
        const bool tagged = is_trunk(pd->mode);
        Kind k = kind(node);
        if (k != Kind::Switch && k != Kind::L3) {
          if (!tagged) out.push_back({node, port});
          continue;
        }
        auto pit = ports_.find({node, port});
        if (pit == ports_.end()) continue;
        std::optional<int> next;
        if (auto* a = std::get_if<AccessMode>(&pit->second->mode)) {
          if (!tagged) next = a->vid.value();
        } else if (tagged && is_member(pit->second->mode, VlanId(vid))) {
          next = vid;
        }
        if (next && seen.insert({node, *next}).second) q.push({node, *next});
      }
    }
    // Every state in one domain yields the same endpoint set.
    for (const auto& st : seen) domains_[st] = out;
    return domains_[{start, start_vid}];
  }

  const Iface* iface_at(const Attach& a) const {
    auto it = ifaces_.find(a.node);
    if (it == ifaces_.end()) return nullptr;
    int key = a.port < 0 ? -a.port : a.port;
    for (const auto& f : it->second)
      if (f.key == key && (a.port < 0) == (kind(a.node) == Kind::L3)) return &f;
    return nullptr;
  }

  static bool has_addr(const Iface& f, Ipv4Address ip) {
    for (const auto& a : f.addrs)
      if (a.ip == ip) return true;
    return false;
  }

  bool owns(const std::string& node, Ipv4Address ip) const {
    auto it = ifaces_.find(node);
    if (it == ifaces_.end()) return false;
    for (const auto& f : it->second)
      if (has_addr(f, ip)) return true;
    return false;
  }

  // Where a router sends `dst`: candidate (attachment, next hop) pairs.
  std::vector<std::pair<Attach, Ipv4Address>> next_hops(const std::string& node, Ipv4Address dst) const {
    std::vector<std::pair<Attach, Ipv4Address>> out;
    auto fit = ifaces_.find(node);
    if (fit == ifaces_.end()) return out;
    const bool l3 = kind(node) == Kind::L3;
    auto attach_of = [&](const Iface& f) { return Attach{node, l3 ? -f.key : f.key}; };
    auto on_link = [&](Ipv4Address a) -> const Iface* {
      for (const auto& f : fit->second)
        for (const auto& addr : f.addrs)
          if (addr.network().contains(a)) return &f;
      return nullptr;
    };

    // Longest prefix among connected subnets and static routes.
    int best = -1;
    for (const auto& f : fit->second)
      for (const auto& a : f.addrs)
        if (a.network().contains(dst) && a.prefix_len > best) {
          best = a.prefix_len;
          out = {{attach_of(f), dst}};
        }
    auto rit = routes_.find(node);
    if (rit != routes_.end()) {
      for (const RouteDecl* r : rit->second) {
        if (!r->prefix.contains(dst) || r->prefix.prefix_len <= best) continue;
        std::vector<std::pair<Attach, Ipv4Address>> cand;
        if (auto* v = std::get_if<VlanId>(&r->via)) {
          cand.push_back({Attach{node, -v->value()}, dst});
        } else if (auto* gw = std::get_if<Ipv4Address>(&r->via)) {
          if (const Iface* f = on_link(*gw)) cand.push_back({attach_of(*f), *gw});
        } else {
          for (const auto& f : fit->second)
            if (f.path && f.next_hop) cand.push_back({attach_of(f), *f.next_hop});
        }
        best = r->prefix.prefix_len;
        out = std::move(cand);
      }
    }
    return out;
  }

  bool walk(const Attach& from, Ipv4Address next_hop, Ipv4Address target, int depth) const {
    if (depth > 32) return false;
    for (const Attach& e : domain(from)) {
      const Iface* f = iface_at(e);
      if (!f || !has_addr(*f, next_hop)) continue;
      if (owns(e.node, target)) return true;
      if (kind(e.node) == Kind::Host) return false;
      for (const auto& [att, nh] : next_hops(e.node, target))
        if (walk(att, nh, target, depth + 1)) return true;
      return false;
    }
    return false;
  }

  const ScenarioConfig& cfg_;
  std::set<std::string> failed_nodes_;
  std::set<std::string> failed_links_;
  std::map<std::string, Kind> kind_;
  std::map<std::pair<std::string, int>, const PortDecl*> ports_;
  std::map<std::string, std::vector<const PortDecl*>> ports_by_node_;
  mutable std::map<std::pair<std::string, int>, std::vector<Attach>> domains_;
  std::map<std::pair<std::string, int>, std::pair<std::string, int>> peer_;
  std::map<std::string, std::vector<Iface>> ifaces_;
  std::map<std::string, std::vector<const RouteDecl*>> routes_;
};

struct AffectedBeamline {
  std::string name;
  std::optional<VlanId> vid;
  friend bool operator==(const AffectedBeamline&, const AffectedBeamline&) = default;
};

// Beamlines with a host that reaches `target` in the healthy network but not
// under the given failures. Without a target each host is checked against
// its own gateway.
inline std::vector<AffectedBeamline> affected_beamlines(const ScenarioConfig& c,
                                                        const std::set<std::string>& failed_nodes,
                                                        const std::set<std::string>& failed_links) {
  std::optional<Ipv4Address> target;
  if (c.engine.probe_target)
    if (const HostDecl* t = c.find_host(*c.engine.probe_target)) target = t->addr.ip;
  Reachability healthy(c);
  Reachability faulted(c, failed_nodes, failed_links);
  std::map<std::string, bool> hit;
  for (const auto& h : c.hosts) {
    if (h.beamline.empty()) continue;
    auto& flag = hit[h.beamline];
    std::optional<Ipv4Address> dst = target ? target : h.gateway;
    if (!dst || flag) continue;
    if (healthy.reaches(h.id, *dst) && !faulted.reaches(h.id, *dst)) flag = true;
  }
  std::vector<AffectedBeamline> out;
  for (const auto& [name, affected] : hit) {
    if (!affected) continue;
    AffectedBeamline a{name, std::nullopt};
    if (const VlanDecl* v = c.find_vlan(std::string_view(name))) a.vid = v->vid;
    out.push_back(a);
  }
  return out;
}

}  // namespace netfab
