#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "netfab/firewall_nat.hpp"
#include "netfab/l2_fabric.hpp"
#include "netfab/l3_routing.hpp"
#include "netfab/link.hpp"
#include "netfab/reachability.hpp"
#include "netfab/resilience.hpp"
#include "netfab/scenario.hpp"
#include "netfab/scenario_io.hpp"

namespace netfab {

enum class TraceEv : std::uint8_t { Tx, Rx, Drop, Nat, Probe, PathUp, PathDown, Fault };

inline const char* to_string(TraceEv e) {
  switch (e) {
    case TraceEv::Tx: return "tx";
    case TraceEv::Rx: return "rx";
    case TraceEv::Drop: return "drop";
    case TraceEv::Nat: return "nat";
    case TraceEv::Probe: return "probe";
    case TraceEv::PathUp: return "path_up";
    case TraceEv::PathDown: return "path_down";
    case TraceEv::Fault: return "fault";
  }
  return "?";
}

enum class NodeKind : std::uint8_t { Switch, L3, Firewall, Balancer, Host };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Switch: return "switch";
    case NodeKind::L3: return "l3";
    case NodeKind::Firewall: return "firewall";
    case NodeKind::Balancer: return "balancer";
    case NodeKind::Host: return "host";
  }
  return "?";
}

struct FlowStats {
  std::string id;
  TrafficKind kind = TrafficKind::Cbr;
  std::string src;
  std::string dst;
  std::uint64_t sent_packets = 0;
  std::uint64_t sent_bytes = 0;  // IP bytes handed to the source host
  std::uint64_t delivered_packets = 0;
  std::uint64_t delivered_bytes = 0;  // IP bytes that reached the destination
  std::uint64_t delivered_payload = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t replies = 0;  // ping: echo replies back at the source
  std::uint64_t misdelivered = 0;
  std::optional<Time> first_sent;
  std::optional<Time> first_delivery;
  std::optional<Time> last_delivery;
  std::optional<Time> completed;
  // Delivered IP bytes per sampling window.
  std::vector<std::uint64_t> windows;
};

struct LinkMetrics {
  std::string id;
  std::uint64_t bandwidth = 0;
  bool up = true;
  std::array<LinkDirectionStats, 2> dir{};
};

struct FirewallMetrics {
  std::string id;
  std::uint64_t forwarded_bytes = 0;
  std::uint64_t released_bytes = 0;
  std::size_t nat_size = 0;
  std::size_t queue = 0;
  std::array<std::uint64_t, kDropReasonCount> drops{};
};

struct BalancerMetrics {
  std::string id;
  std::array<std::uint64_t, 2> dispatched{};
  std::array<std::optional<Time>, 2> last_dispatch{};
  std::array<PathState, 2> state{PathState::Up, PathState::Up};
  std::vector<PathTransition> transitions;
  std::uint64_t unavailable = 0;
};

struct Metrics {
  Time end_time = 0;
  std::uint64_t events = 0;
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_flight = 0;
  std::array<std::uint64_t, kDropReasonCount> dropped{};
  std::vector<FlowStats> flows;
  std::vector<LinkMetrics> links;
  std::vector<FirewallMetrics> firewalls;
  std::vector<BalancerMetrics> balancers;
  std::uint64_t trace_lines = 0;
  std::string trace_digest;

  std::uint64_t dropped_total() const {
    std::uint64_t n = 0;
    for (auto d : dropped) n += d;
    return n;
  }
  const FlowStats* flow(std::string_view id) const {
    for (const auto& f : flows)
      if (f.id == id) return &f;
    return nullptr;
  }
};

struct PortStatus {
  int port = 0;
  bool up = true;
  std::string mode;
  std::optional<PortCounters> counters;
};

struct NodeStatus {
  std::string id;
  NodeKind kind = NodeKind::Host;
  bool up = true;
  std::vector<PortStatus> ports;
  std::size_t fdb_size = 0;
  std::size_t nat_size = 0;
  std::size_t conn_size = 0;
  std::size_t queue = 0;
  std::vector<std::pair<std::string, PathState>> paths;
};

struct StatusReport {
  Time at = 0;
  std::vector<NodeStatus> nodes;
  std::vector<std::string> failed_nodes;
  std::vector<std::string> failed_links;
  std::vector<AffectedBeamline> affected;
};

struct EngineOptions {
  std::ostream* trace = nullptr;  // full trace sink
  bool digest = false;            // hash trace lines even without a sink
  std::size_t trace_tail = 0;     // keep the last N lines in memory
  Time window = kSecond;          // flow throughput sampling window
};

// Callbacks for tests and invariant checks.
struct EngineHooks {
  // A frame accepted by a link at (node, port).
  std::function<void(const std::string& node, int port, const Frame&)> on_transmit;
  // A frame accepted by a host NIC (addressed to it, broadcast or multicast).
  std::function<void(const std::string& host, const Frame&)> on_host_receive;
  // An IP packet delivered to its destination node.
  std::function<void(const std::string& node, const Packet&)> on_deliver;
};

// Deterministic discrete-event simulation of a scenario.
class Engine {
 public:
  static constexpr Time kArpTimeout = kSecond;
  static constexpr std::size_t kArpQueue = 256;
  static constexpr std::uint32_t kWindowBytes = 65536;
  static constexpr std::uint32_t kMss = 1460;

  explicit Engine(ScenarioConfig cfg, EngineOptions opt = {}) : cfg_(std::move(cfg)), opt_(opt), rng_(cfg_.engine.seed) {
    validate_scenario(cfg_);
    tracing_ = opt_.trace || opt_.digest || opt_.trace_tail > 0;
    build();
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  EngineHooks& hooks() { return hooks_; }
  Time now() const { return now_; }

  std::uint64_t schedule(Time at, std::function<void()> fn) {
    if (at < now_) throw Error(Errc::InvalidArgument, "cannot schedule in the past");
    std::uint64_t seq = next_seq_++;
    queue_.push(Event{at, seq, std::move(fn)});
    return seq;
  }

  void run_until(Time t_end) {
    if (t_end < now_) throw Error(Errc::InvalidArgument, "run_until before current time");
    while (!queue_.empty() && queue_.top().at <= t_end) {
      Event ev = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      now_ = ev.at;
      events_++;
      ev.fn();
    }
    now_ = t_end;
  }

  Metrics run() {
    run_until(cfg_.engine.duration);
    return metrics();
  }

  void inject_fault(Time at, FaultAction action, const std::string& target) {
    bool node = node_index_.count(target) > 0;
    bool link = link_index_.count(target) > 0;
    if (!node && !link) throw Error(Errc::UnknownTarget, "no node or link '" + target + "'");
    if (action == FaultAction::FailNode && !node) throw Error(Errc::UnknownTarget, "'" + target + "' is not a node");
    if (action == FaultAction::FailLink && !link) throw Error(Errc::UnknownTarget, "'" + target + "' is not a link");
    schedule(at, [this, action, target] { apply_fault(action, target); });
  }

  // Hands an IP packet to a host's stack as if an application sent it.
  std::uint64_t send_from(const std::string& host, Packet p, int flow = -1) {
    int n = node_of(host, NodeKind::Host);
    p.flow_tag = flow;
    inject(p);
    if (nodes_[n].up) host_send(n, p);
    else note_drop(p.uid, DropReason::NodeDown);
    release(p.uid);
    return p.uid;
  }

  // Puts a raw frame on a host's link.
  void send_frame(const std::string& host, Frame f) {
    int n = node_of(host, NodeKind::Host);
    if (f.packet && f.packet->uid == 0 && f.packet->protocol != Protocol::Arp) {
      Packet p = *f.packet;
      inject(p);
      f.packet = p;
      transmit(n, 0, std::move(f));
      release(p.uid);
    } else {
      transmit(n, 0, std::move(f));
    }
  }

  MacAddress host_mac(const std::string& host) const { return nodes_[node_of(host, NodeKind::Host)].mac; }

  const Switch& bridge(const std::string& id) const {
    const auto& n = nodes_[node_index(id)];
    if (!n.sw) throw Error(Errc::UnknownNode, "'" + id + "' is not a switch");
    return *n.sw;
  }
  const L3Switch& router(const std::string& id) const { return *nodes_[node_of(id, NodeKind::L3)].l3; }
  const Firewall& firewall(const std::string& id) const { return *nodes_[node_of(id, NodeKind::Firewall)].fw; }
  Firewall& firewall(const std::string& id) { return *nodes_[node_of(id, NodeKind::Firewall)].fw; }
  const LoadBalancer& balancer(const std::string& id) const { return *nodes_[node_of(id, NodeKind::Balancer)].lb; }
  const Link& link(const std::string& id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end()) throw Error(Errc::UnknownTarget, "no link '" + id + "'");
    return links_[it->second].link;
  }
  bool node_up(const std::string& id) const { return nodes_[node_index(id)].up; }
  NodeKind node_kind(const std::string& id) const { return nodes_[node_index(id)].kind; }
  bool has_node(const std::string& id) const { return node_index_.count(id) > 0; }

  const FlowStats& flow(const std::string& id) const {
    for (const auto& g : gens_)
      if (g.stats.id == id) return g.stats;
    throw Error(Errc::UnknownTarget, "no traffic '" + id + "'");
  }

  // Packets injected but neither delivered nor finally dropped, counted by
  // scanning the ledger.
  std::uint64_t ledger_in_flight() const {
    std::uint64_t n = 0;
    for (const auto& [uid, e] : ledger_) n += !e.delivered;
    return n;
  }

  std::string trace_digest() const {
    static const char* hex = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 0; i < 16; ++i) s[15 - i] = hex[(digest_ >> (4 * i)) & 0xf];
    return s;
  }
  std::uint64_t trace_lines() const { return trace_lines_; }
  const std::deque<std::string>& trace_tail() const { return tail_; }

  Metrics metrics() const {
    Metrics m;
    m.end_time = now_;
    m.events = events_;
    m.injected = injected_;
    m.delivered = delivered_;
    m.dropped = dropped_;
    m.in_flight = injected_ - delivered_ - m.dropped_total();
    for (const auto& g : gens_) m.flows.push_back(g.stats);
    for (const auto& l : links_) {
      LinkMetrics lm{l.decl.id, l.decl.bandwidth, l.link.up(), {l.link.stats(0), l.link.stats(1)}};
      m.links.push_back(lm);
    }
    for (const auto& n : nodes_) {
      if (n.kind == NodeKind::Firewall) {
        FirewallMetrics f;
        f.id = n.id;
        f.forwarded_bytes = n.fw->forwarded_bytes();
        f.released_bytes = n.fw->released_bytes();
        f.nat_size = n.fw->nat_size();
        f.queue = n.fw->queue_size();
        for (int r = 0; r < kDropReasonCount; ++r) f.drops[r] = n.fw->drops(static_cast<DropReason>(r));
        m.firewalls.push_back(f);
      } else if (n.kind == NodeKind::Balancer) {
        BalancerMetrics b;
        b.id = n.id;
        b.dispatched = n.dispatched;
        b.last_dispatch = n.last_dispatch;
        for (int i = 0; i < 2; ++i) b.state[i] = n.lb->path(i).state;
        b.transitions = n.lb->transitions();
        b.unavailable = n.lb->unavailable_count();
        m.balancers.push_back(b);
      }
    }
    m.trace_lines = trace_lines_;
    if (tracing_) m.trace_digest = trace_digest();
    return m;
  }

  std::vector<std::string> failed_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
      if (!n.up) out.push_back(n.id);
    return out;
  }
  std::vector<std::string> failed_links() const {
    std::vector<std::string> out;
    for (const auto& l : links_)
      if (!l.link.up()) out.push_back(l.decl.id);
    return out;
  }

  StatusReport status(const std::optional<std::string>& node = std::nullopt) const {
    StatusReport r;
    r.at = now_;
    if (node && !node_index_.count(*node)) throw Error(Errc::UnknownNode, "no node '" + *node + "'");
    for (const auto& n : nodes_) {
      if (node && n.id != *node) continue;
      NodeStatus s;
      s.id = n.id;
      s.kind = n.kind;
      s.up = n.up;
      if (n.sw) {
        for (const auto& [id, p] : n.sw->ports()) {
          if (id == 0 && n.l3) continue;
          std::string mode;
          if (auto* a = std::get_if<AccessMode>(&p.mode)) {
            mode = "access:" + std::to_string(a->vid.value());
          } else {
            mode = "trunk:";
            bool first = true;
            for (auto v : std::get<TrunkMode>(p.mode).allowed) {
              mode += (first ? "" : ",") + std::to_string(v.value());
              first = false;
            }
          }
          s.ports.push_back({id, p.link_up, mode, n.sw->counters(id)});
        }
        s.fdb_size = n.sw->fdb_size();
      } else {
        for (const auto& [port, att] : n.ports)
          s.ports.push_back({port, links_[att.link].link.up(), n.kind == NodeKind::Host ? "host" : "routed", std::nullopt});
      }
      if (n.l3) s.conn_size = n.l3->conn_table().size();
      if (n.fw) {
        s.nat_size = n.fw->nat_size();
        s.conn_size = n.fw->conn_table().size();
        s.queue = n.fw->queue_size();
      }
      if (n.lb)
        for (int i = 0; i < LoadBalancer::kPaths; ++i) s.paths.push_back({path_name(i), n.lb->path(i).state});
      r.nodes.push_back(std::move(s));
    }
    r.failed_nodes = failed_nodes();
    r.failed_links = failed_links();
    r.affected = affected_beamlines(cfg_, {r.failed_nodes.begin(), r.failed_nodes.end()},
                                    {r.failed_links.begin(), r.failed_links.end()});
    return r;
  }

 private:
  struct Event {
    Time at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  struct Attachment {
    int link = -1;
    int dir = 0;  // direction index when transmitting from this end
  };

  struct Pending {
    std::deque<Packet> packets;
    std::uint64_t gen = 0;
  };

  struct ArpTable {
    std::map<std::pair<int, std::uint32_t>, MacAddress> cache;
    std::map<std::pair<int, std::uint32_t>, Pending> pending;
  };

  // Firewall or balancer interface, keyed by port.
  struct RoutedPort {
    int port = 0;
    MacAddress mac;
    std::vector<InterfaceAddress> addrs;
    Zone zone = Zone::Dmz;
    std::optional<int> path;  // 0 or 1
    std::optional<Ipv4Address> next_hop;
    std::optional<Ipv4Address> peer;

    bool has(Ipv4Address a) const {
      for (const auto& x : addrs)
        if (x.ip == a) return true;
      return false;
    }
    Ipv4Address source_for(Ipv4Address dst) const {
      for (const auto& x : addrs)
        if (x.network().contains(dst)) return x.ip;
      return addrs.front().ip;
    }
  };

  struct LbRoute {
    int port = -1;
    std::optional<Ipv4Address> gateway;
    bool balanced = false;
  };

  struct Node {
    std::string id;
    NodeKind kind = NodeKind::Host;
    bool up = true;
    MacAddress mac;  // host NIC or L3 routing engine
    std::map<int, Attachment> ports;
    ArpTable arp;
    // host
    const HostDecl* host = nullptr;
    // switch / l3
    std::unique_ptr<Switch> sw;
    std::unique_ptr<L3Switch> l3;
    // firewall / balancer
    std::map<int, RoutedPort> ifaces;
    std::unique_ptr<Firewall> fw;
    std::unique_ptr<LoadBalancer> lb;
    PrefixTable<LbRoute> lb_routes;
    std::array<int, 2> path_port{-1, -1};
    std::array<std::uint64_t, 2> dispatched{};
    std::array<std::optional<Time>, 2> last_dispatch{};
  };

  struct LinkState {
    LinkDecl decl;
    Link link;
    std::uint64_t epoch = 0;
    std::array<std::pair<int, int>, 2> ends{};  // (node, port) for a, b
  };

  struct LedgerEntry {
    int copies = 0;
    bool delivered = false;
    bool has_reason = false;
    DropReason reason = DropReason::Undeliverable;
    int flow = -1;
    std::uint32_t bytes = 0;
    std::uint32_t payload = 0;
    PacketOp op = PacketOp::None;
  };

  struct Generator {
    TrafficDecl decl;
    FlowStats stats;
    int src = -1;
    Ipv4Address dst;
    std::uint16_t sport = 0;
    std::uint16_t ident = 0;
    Time start = 0;
    // cbr / ping
    std::uint64_t sent_count = 0;
    // bulk
    std::uint64_t sent_payload = 0;
    std::uint64_t in_flight = 0;
    bool refill_pending = false;
  };

  // ---------------------------------------------------------------- build

  static MacAddress make_mac(int kind, int index, int port) {
    return MacAddress::from_u64(0x020000000000ULL | (std::uint64_t(kind) << 32) | (std::uint64_t(index) << 12) |
                                std::uint64_t(port & 0xfff));
  }

  void build() {
    auto add = [&](const std::string& id, NodeKind k) -> Node& {
      node_index_[id] = static_cast<int>(nodes_.size());
      nodes_.push_back(Node{});
      nodes_.back().id = id;
      nodes_.back().kind = k;
      return nodes_.back();
    };
    for (const auto& s : cfg_.switches) {
      Node& n = add(s.id, s.layer3 ? NodeKind::L3 : NodeKind::Switch);
      n.sw = std::make_unique<Switch>(s.fdb_aging);
      n.sw->set_hash_salt(rng_());
      if (s.layer3) {
        n.l3 = std::make_unique<L3Switch>();
        n.mac = make_mac(1, static_cast<int>(nodes_.size()), 0);
      }
    }
    for (const auto& f : cfg_.firewalls) {
      Node& n = add(f.id, NodeKind::Firewall);
      n.fw = std::make_unique<Firewall>(f.config);
    }
    for (const auto& b : cfg_.balancers) {
      Node& n = add(b.id, NodeKind::Balancer);
      n.lb = std::make_unique<LoadBalancer>(b.config, rng_());
    }
    for (const auto& h : cfg_.hosts) {
      Node& n = add(h.id, NodeKind::Host);
      n.host = &h;
      n.mac = h.mac ? *h.mac : make_mac(3, static_cast<int>(nodes_.size()), 0);
      host_by_ip_[h.addr.ip.value] = node_index_[h.id];
    }

    for (const auto& p : cfg_.ports) nodes_[node_index_.at(p.node)].sw->add_port({p.port, p.mode, true, p.lag});

    std::map<int, std::set<VlanId>> svis;
    for (const auto& i : cfg_.interfaces) {
      Node& n = nodes_[node_index_.at(i.node)];
      if (n.kind == NodeKind::L3) {
        n.l3->add_interface(*i.vid, i.addrs[0].ip, i.addrs[0].prefix_len, i.zone);
        svis[node_index_.at(i.node)].insert(*i.vid);
      } else {
        RoutedPort rp{*i.port, make_mac(2, node_index_.at(i.node), *i.port), i.addrs, i.zone,
                      i.path ? std::optional<int>(*i.path - 1) : std::nullopt, i.next_hop, i.peer};
        if (n.fw) n.fw->add_interface(*i.port, i.zone, i.addrs);
        if (n.lb) {
          for (const auto& a : i.addrs) n.lb_routes.insert(a.network(), LbRoute{*i.port, std::nullopt, false});
          if (rp.path) n.path_port[*rp.path] = *i.port;
        }
        n.ifaces.emplace(*i.port, std::move(rp));
      }
    }
    // The routing engine sits behind port 0, a trunk carrying every SVI vid.
    for (const auto& [idx, vids] : svis) {
      Node& n = nodes_[idx];
      n.sw->add_port({0, TrunkMode{vids}, true, std::nullopt});
      for (VlanId v : vids) n.sw->add_static_entry(v, n.mac, 0);
    }

    for (const auto& r : cfg_.routes) {
      Node& n = nodes_[node_index_.at(r.node)];
      if (n.l3) {
        if (auto* v = std::get_if<VlanId>(&r.via)) n.l3->add_route(r.prefix, *v);
        else n.l3->add_route(r.prefix, std::get<Ipv4Address>(r.via));
      } else if (n.fw) {
        n.fw->add_route(r.prefix, std::get<Ipv4Address>(r.via));
      } else if (n.lb) {
        LbRoute lr;
        if (std::holds_alternative<Balanced>(r.via)) {
          lr.balanced = true;
        } else {
          Ipv4Address gw = std::get<Ipv4Address>(r.via);
          for (const auto& [port, rp] : n.ifaces)
            for (const auto& a : rp.addrs)
              if (a.network().contains(gw)) lr.port = port;
          if (lr.port < 0) throw ValidationError("route " + r.node, "gateway not on an attached subnet");
          lr.gateway = gw;
        }
        if (!n.lb_routes.insert(r.prefix, lr)) throw ValidationError("route " + r.node, "duplicate prefix");
      }
    }
    for (const auto& a : cfg_.acls) {
      Node& n = nodes_[node_index_.at(a.node)];
      if (n.l3) n.l3->policy().set(a.from, a.to, a.verdict);
      if (n.fw) n.fw->policy().set(a.from, a.to, a.verdict);
    }
    for (const auto& m : cfg_.masquerades) nodes_[node_index_.at(m.node)].fw->add_scope({m.scope, m.external});

    for (const auto& l : cfg_.links) {
      int ia = node_index_.at(l.a.node), ib = node_index_.at(l.b.node);
      link_index_[l.id] = static_cast<int>(links_.size());
      links_.push_back(LinkState{l, Link(l.bandwidth, l.propagation), 0, {{{ia, l.a.port}, {ib, l.b.port}}}});
      nodes_[ia].ports[l.a.port] = {static_cast<int>(links_.size()) - 1, 0};
      nodes_[ib].ports[l.b.port] = {static_cast<int>(links_.size()) - 1, 1};
    }
    for (auto& n : nodes_)
      if (n.kind == NodeKind::Host) n.ports.try_emplace(0, Attachment{});

    // Faults first: at equal times they precede ticks and traffic.
    for (const auto& f : cfg_.faults) inject_fault(f.at, f.action, f.target);

    recurring(cfg_.engine.age_interval, cfg_.engine.age_interval, [this] { age_tick(); });
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      if (nodes_[i].fw)
        recurring(cfg_.engine.shape_interval, cfg_.engine.shape_interval, [this, i] { shape_tick(i); });
      if (nodes_[i].lb && nodes_[i].path_port[0] >= 0 && nodes_[i].path_port[1] >= 0)
        recurring(0, nodes_[i].lb->config().probe_interval, [this, i] { probe_tick(i); });
    }

    for (const auto& t : cfg_.traffic) {
      Generator g;
      g.decl = t;
      g.stats.id = t.id;
      g.stats.kind = t.kind;
      g.stats.src = t.src;
      g.stats.dst = t.dst;
      g.src = node_index_.at(t.src);
      if (auto it = node_index_.find(t.dst); it != node_index_.end()) g.dst = nodes_[it->second].host->addr.ip;
      else g.dst = Ipv4Address::parse(t.dst);
      const int idx = static_cast<int>(gens_.size());
      g.sport = static_cast<std::uint16_t>(40000 + idx % 20000);
      g.ident = static_cast<std::uint16_t>(idx + 1);
      g.start = t.start + static_cast<Time>(rng_() % 100);
      gens_.push_back(std::move(g));
    }
    for (int i = 0; i < static_cast<int>(gens_.size()); ++i) {
      schedule(gens_[i].start, [this, i] {
        switch (gens_[i].decl.kind) {
          case TrafficKind::Cbr: cbr_send(i); break;
          case TrafficKind::Bulk: bulk_refill(i); break;
          case TrafficKind::Ping: ping_send(i); break;
        }
      });
    }
  }

  void recurring(Time first, Time period, std::function<void()> fn) {
    schedule(first, [this, first, period, fn] {
      fn();
      recurring(first + period, period, fn);
    });
  }

  int node_index(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw Error(Errc::UnknownNode, "no node '" + id + "'");
    return it->second;
  }
  int node_of(const std::string& id, NodeKind k) const {
    int n = node_index(id);
    if (nodes_[n].kind != k) throw Error(Errc::UnknownNode, "'" + id + "' is not a " + to_string(k));
    return n;
  }

  // --------------------------------------------------------------- ledger

  void inject(Packet& p) {
    p.uid = next_uid_++;
    LedgerEntry e;
    e.copies = 1;
    e.flow = p.flow_tag;
    e.bytes = p.network_bytes();
    e.payload = p.payload_bytes;
    e.op = p.op;
    ledger_.emplace(p.uid, e);
    injected_++;
  }

  void hold(std::uint64_t uid) {
    if (uid) ledger_.at(uid).copies++;
  }

  void release(std::uint64_t uid) {
    if (!uid) return;
    auto it = ledger_.find(uid);
    if (--it->second.copies > 0) return;
    LedgerEntry e = it->second;
    ledger_.erase(it);
    if (e.delivered) return;
    DropReason r = e.has_reason ? e.reason : DropReason::Undeliverable;
    dropped_[static_cast<int>(r)]++;
    if (e.flow >= 0) flow_dropped(e);
  }

  void note_drop(std::uint64_t uid, DropReason r) {
    if (!uid) return;
    auto& e = ledger_.at(uid);
    e.has_reason = true;
    e.reason = r;
  }

  void note_delivered(int n, const Packet& p) {
    if (hooks_.on_deliver) hooks_.on_deliver(nodes_[n].id, p);
    if (!p.uid) return;
    auto& e = ledger_.at(p.uid);
    if (e.delivered) return;
    e.delivered = true;
    delivered_++;
    if (e.flow >= 0) flow_delivered(e);
  }

  // ---------------------------------------------------------------- trace

  void trace(int n, TraceEv ev, std::optional<VlanId> vid, const Packet* p, const std::string& info) {
    if (!tracing_) return;
    std::string line = "t=" + std::to_string(now_) + "\tnode=" + (n >= 0 ? nodes_[n].id : std::string("-")) +
                       "\tev=" + to_string(ev) + "\tvlan=" + (vid ? std::to_string(vid->value()) : std::string("-")) +
                       "\tflow=";
    if (p) {
      line += p->src_ip.to_string() + ":" + std::to_string(p->src_port) + "->" + p->dst_ip.to_string() + ":" +
              std::to_string(p->dst_port);
    } else {
      line += "0.0.0.0:0->0.0.0.0:0";
    }
    line += "\tinfo=" + info + "\n";
    for (unsigned char ch : line) {
      digest_ ^= ch;
      digest_ *= 0x100000001b3ULL;
    }
    trace_lines_++;
    if (opt_.trace) *opt_.trace << line;
    if (opt_.trace_tail) {
      tail_.push_back(line.substr(0, line.size() - 1));
      if (tail_.size() > opt_.trace_tail) tail_.pop_front();
    }
  }

  void trace_frame(int n, TraceEv ev, const Frame& f, const std::string& info) {
    if (!tracing_) return;
    std::optional<VlanId> vid;
    if (f.tag) vid = f.tag->vid;
    std::string text = info;
    if (f.packet) text += std::string(text.empty() ? "" : " ") + "proto=" + to_string(f.packet->protocol);
    trace(n, ev, vid, f.packet ? &*f.packet : nullptr, text + " size=" + std::to_string(f.size_bytes));
  }

  void drop_packet(int n, const Packet& p, std::optional<VlanId> vid, DropReason r) {
    note_drop(p.uid, r);
    trace(n, TraceEv::Drop, vid, &p, std::string("reason=") + to_string(r));
  }

  // ---------------------------------------------------------------- links

  void transmit(int n, int port, Frame f) {
    auto it = nodes_[n].ports.find(port);
    if (it == nodes_[n].ports.end() || it->second.link < 0) return;
    const int li = it->second.link;
    const int dir = it->second.dir;
    LinkState& L = links_[li];
    const std::uint64_t uid = f.packet ? f.packet->uid : 0;
    auto r = L.link.transmit(dir, f, now_);
    if (auto* reason = std::get_if<DropReason>(&r)) {
      note_drop(uid, *reason);
      trace_frame(n, TraceEv::Drop, f, std::string("reason=") + to_string(*reason) + " port=" + std::to_string(port));
      return;
    }
    hold(uid);
    trace_frame(n, TraceEv::Tx, f, "port=" + std::to_string(port));
    if (hooks_.on_transmit) hooks_.on_transmit(nodes_[n].id, port, f);
    const std::uint64_t epoch = L.epoch;
    schedule(std::get<Time>(r), [this, li, dir, epoch, f = std::move(f)]() mutable { deliver(li, dir, epoch, std::move(f)); });
  }

  void deliver(int li, int dir, std::uint64_t epoch, Frame f) {
    LinkState& L = links_[li];
    auto [n, port] = L.ends[1 - dir];
    const std::uint64_t uid = f.packet ? f.packet->uid : 0;
    if (epoch != L.epoch || !L.link.up()) {
      note_drop(uid, DropReason::LinkDown);
      trace_frame(n, TraceEv::Drop, f, "reason=link-down port=" + std::to_string(port));
    } else if (!nodes_[n].up) {
      note_drop(uid, DropReason::NodeDown);
      trace_frame(n, TraceEv::Drop, f, "reason=node-down port=" + std::to_string(port));
    } else {
      trace_frame(n, TraceEv::Rx, f, "port=" + std::to_string(port));
      receive(n, port, f);
    }
    release(uid);
  }

  void receive(int n, int port, const Frame& f) {
    switch (nodes_[n].kind) {
      case NodeKind::Switch:
      case NodeKind::L3: bridge_ingress(n, port, f); break;
      case NodeKind::Firewall: firewall_receive(n, port, f); break;
      case NodeKind::Balancer: balancer_receive(n, port, f); break;
      case NodeKind::Host: host_receive(n, f); break;
    }
  }

  // ------------------------------------------------------------------ ARP

  MacAddress own_mac(int n, int key) const {
    const Node& node = nodes_[n];
    if (node.kind == NodeKind::Host || node.kind == NodeKind::L3) return node.mac;
    return node.ifaces.at(key).mac;
  }

  // Puts an IP packet in a frame toward `dmac` out of interface `key`
  // (port, or vid for an L3 switch).
  void emit(int n, int key, MacAddress dmac, const Packet& p) {
    Frame f = Frame::carrying(own_mac(n, key), dmac, p);
    if (nodes_[n].kind == NodeKind::L3) bridge_send(n, VlanId(key), std::move(f));
    else transmit(n, key, std::move(f));
  }

  Ipv4Address arp_source(int n, int key, Ipv4Address target) const {
    const Node& node = nodes_[n];
    if (node.kind == NodeKind::Host) return node.host->addr.ip;
    if (node.kind == NodeKind::L3) return node.l3->interface(VlanId(key))->ip;
    return node.ifaces.at(key).source_for(target);
  }

  void send_arp(int n, int key, PacketOp op, Ipv4Address sender, Ipv4Address target, MacAddress dmac) {
    Packet a;
    a.protocol = Protocol::Arp;
    a.op = op;
    a.src_ip = sender;
    a.dst_ip = target;
    emit(n, key, dmac, a);
  }

  // Resolves `next_hop` and sends; the caller keeps its own hold on p.
  void send_ip(int n, int key, Ipv4Address next_hop, const Packet& p) {
    Node& node = nodes_[n];
    const auto k = std::make_pair(key, next_hop.value);
    if (auto it = node.arp.cache.find(k); it != node.arp.cache.end()) {
      emit(n, key, it->second, p);
      return;
    }
    auto [it, fresh] = node.arp.pending.try_emplace(k);
    if (it->second.packets.size() >= kArpQueue) {
      drop_packet(n, p, std::nullopt, DropReason::QueueFull);
      return;
    }
    hold(p.uid);
    it->second.packets.push_back(p);
    if (fresh) {
      const std::uint64_t gen = it->second.gen = ++arp_gen_;
      send_arp(n, key, PacketOp::Request, arp_source(n, key, next_hop), next_hop, MacAddress::broadcast());
      schedule(now_ + kArpTimeout, [this, n, k, gen] { arp_expire(n, k, gen); });
    }
  }

  void arp_expire(int n, std::pair<int, std::uint32_t> k, std::uint64_t gen) {
    auto& pending = nodes_[n].arp.pending;
    auto it = pending.find(k);
    if (it == pending.end() || it->second.gen != gen) return;
    auto packets = std::move(it->second.packets);
    pending.erase(it);
    for (const auto& p : packets) {
      drop_packet(n, p, std::nullopt, DropReason::ArpTimeout);
      release(p.uid);
    }
  }

  void arp_learn(int n, int key, Ipv4Address ip, MacAddress mac) {
    Node& node = nodes_[n];
    const auto k = std::make_pair(key, ip.value);
    node.arp.cache[k] = mac;
    auto it = node.arp.pending.find(k);
    if (it == node.arp.pending.end()) return;
    auto packets = std::move(it->second.packets);
    node.arp.pending.erase(it);
    for (const auto& p : packets) {
      emit(n, key, mac, p);
      release(p.uid);
    }
  }

  // Handles an ARP frame on interface `key` whose addresses are tested by
  // `mine`. Returns true when the frame was ARP.
  template <class Owns>
  bool handle_arp(int n, int key, const Frame& f, Owns mine) {
    const Packet& a = *f.packet;
    if (a.protocol != Protocol::Arp) return false;
    if (a.op == PacketOp::Request && mine(a.dst_ip)) {
      arp_learn(n, key, a.src_ip, f.src);
      send_arp(n, key, PacketOp::Reply, a.dst_ip, a.src_ip, f.src);
    } else if (a.op == PacketOp::Reply && f.dst == own_mac(n, key)) {
      arp_learn(n, key, a.src_ip, f.src);
    }
    return true;
  }

  // ----------------------------------------------------------------- hosts

  void host_send(int n, const Packet& p) {
    const HostDecl& h = *nodes_[n].host;
    Ipv4Address nh = p.dst_ip;
    if (!h.addr.network().contains(p.dst_ip)) {
      if (!h.gateway) {
        drop_packet(n, p, std::nullopt, DropReason::NoRoute);
        return;
      }
      nh = *h.gateway;
    }
    send_ip(n, 0, nh, p);
  }

  void host_receive(int n, const Frame& f) {
    Node& node = nodes_[n];
    if (f.tag) {
      if (f.packet) drop_packet(n, *f.packet, f.tag->vid, DropReason::VlanFilter);
      return;
    }
    if (f.dst != node.mac && classify_dst(f) == DstClass::Unicast) return;
    if (hooks_.on_host_receive) hooks_.on_host_receive(node.id, f);
    if (!f.packet) return;
    const Ipv4Address me = node.host->addr.ip;
    if (handle_arp(n, 0, f, [&](Ipv4Address a) { return a == me; })) return;
    const Packet& p = *f.packet;
    if (f.dst != node.mac || p.dst_ip != me) return;
    note_delivered(n, p);

    if (p.protocol == Protocol::Icmp && p.op == PacketOp::Request) {
      Packet r = make_packet(Protocol::Icmp, me, 0, p.src_ip, 0, p.payload_bytes);
      r.op = PacketOp::Reply;
      r.ident = p.ident;
      r.flow_tag = p.flow_tag;
      inject(r);
      host_send(n, r);
      release(r.uid);
    } else if (p.protocol == Protocol::Icmp && p.op == PacketOp::Reply && p.flow_tag >= 0) {
      Generator& g = gens_[p.flow_tag];
      if (g.src != n || p.ident != g.ident) {
        g.stats.misdelivered++;
      } else {
        g.stats.replies++;
        if (g.stats.replies == g.decl.count) g.stats.completed = now_;
      }
    }
  }

  // ------------------------------------------------------- switches and L3

  void bridge_ingress(int n, int port, const Frame& f) {
    Switch& sw = *nodes_[n].sw;
    const std::uint64_t before = sw.counters(port).drop_frames;
    std::vector<Emission> em;
    try {
      em = sw.ingress(port, f, now_);
    } catch (const Error&) {
      if (f.packet) drop_packet(n, *f.packet, f.tag ? std::optional(f.tag->vid) : std::nullopt, DropReason::LinkDown);
      return;
    }
    if (em.empty() && sw.counters(port).drop_frames > before) {
      if (f.packet) note_drop(f.packet->uid, DropReason::VlanFilter);
      trace_frame(n, TraceEv::Drop, f, "reason=vlan-filter port=" + std::to_string(port));
      return;
    }
    for (auto& e : em) {
      if (e.port == 0 && nodes_[n].l3) router_receive(n, e.frame);
      else transmit(n, e.port, std::move(e.frame));
    }
  }

  void bridge_send(int n, VlanId vid, Frame f) { bridge_ingress(n, 0, push_tag(std::move(f), vid)); }

  void router_receive(int n, const Frame& tagged) {
    Node& node = nodes_[n];
    auto [f, vid] = pop_tag(tagged);
    if (!f.packet) return;
    const VlanInterface* ifc = node.l3->interface(vid);
    if (!ifc) return;
    if (handle_arp(n, vid.value(), f, [&](Ipv4Address a) { return a == ifc->ip; })) return;
    if (f.dst != node.mac) return;
    const Packet& p = *f.packet;

    for (const auto& [v, other] : node.l3->interfaces()) {
      if (other.ip != p.dst_ip) continue;
      note_delivered(n, p);
      if (p.protocol == Protocol::Icmp && p.op == PacketOp::Request) {
        Packet r = make_packet(Protocol::Icmp, p.dst_ip, 0, p.src_ip, 0, p.payload_bytes);
        r.op = PacketOp::Reply;
        r.ident = p.ident;
        r.flow_tag = p.flow_tag;
        inject(r);
        router_originate(n, r);
        release(r.uid);
      }
      return;
    }

    auto res = node.l3->forward(p, vid, now_);
    if (auto* d = std::get_if<Dropped>(&res)) {
      drop_packet(n, p, vid, d->reason);
      return;
    }
    const auto& fw = std::get<Forwarded>(res);
    send_ip(n, fw.egress.value(), fw.next_hop, fw.packet);
  }

  void router_originate(int n, const Packet& p) {
    Node& node = nodes_[n];
    auto route = node.l3->route_lookup(p.dst_ip);
    if (!route) {
      drop_packet(n, p, std::nullopt, DropReason::NoRoute);
      return;
    }
    if (auto* v = std::get_if<VlanId>(&route->next_hop)) {
      send_ip(n, v->value(), p.dst_ip, p);
    } else {
      Ipv4Address gw = std::get<Ipv4Address>(route->next_hop);
      send_ip(n, node.l3->attached_vid(gw)->value(), gw, p);
    }
  }

  // ------------------------------------------------------------ firewalls

  void firewall_receive(int n, int port, const Frame& f) {
    Node& node = nodes_[n];
    auto it = node.ifaces.find(port);
    if (it == node.ifaces.end() || !f.packet) return;
    const RoutedPort& rp = it->second;
    if (f.tag) {
      drop_packet(n, *f.packet, f.tag->vid, DropReason::VlanFilter);
      return;
    }
    if (handle_arp(n, port, f, [&](Ipv4Address a) { return rp.has(a); })) return;
    if (f.dst != rp.mac) return;
    const Packet& p = *f.packet;
    if (node.fw->owns(p.dst_ip) && !node.fw->is_external(p.dst_ip)) {
      note_delivered(n, p);
      answer_locally(n, port, f);
      return;
    }
    if (!node.fw->enqueue(QueuedPacket{p, now_, port})) {
      drop_packet(n, p, std::nullopt, DropReason::QueueFull);
      return;
    }
    hold(p.uid);
  }

  void shape_tick(int n) {
    Node& node = nodes_[n];
    if (!node.up) return;
    for (auto& q : node.fw->shape(now_, cfg_.engine.shape_interval)) {
      const Packet before = q.packet;
      auto res = node.fw->forward(q.packet, q.ingress_iface, now_);
      if (auto* d = std::get_if<Dropped>(&res)) {
        drop_packet(n, before, std::nullopt, d->reason);
      } else {
        const auto& out = std::get<FirewallForward>(res);
        if (out.packet.src_ip != before.src_ip || out.packet.dst_ip != before.dst_ip ||
            out.packet.src_port != before.src_port || out.packet.dst_port != before.dst_port ||
            out.packet.ident != before.ident)
          trace(n, TraceEv::Nat, std::nullopt, &out.packet,
                "orig=" + before.src_ip.to_string() + ":" + std::to_string(before.src_port) + "->" +
                    before.dst_ip.to_string() + ":" + std::to_string(before.dst_port));
        send_ip(n, out.egress_iface, out.next_hop, out.packet);
      }
      release(before.uid);
    }
  }

  // Echo and probe requests to a firewall or balancer address are answered
  // straight back to the sender on the arrival interface.
  void answer_locally(int n, int port, const Frame& f) {
    const Packet& p = *f.packet;
    if (p.op != PacketOp::Request || (p.protocol != Protocol::Icmp && p.protocol != Protocol::Probe)) return;
    Packet r = make_packet(p.protocol, p.dst_ip, 0, p.src_ip, 0, p.payload_bytes);
    r.op = PacketOp::Reply;
    r.ident = p.ident;
    r.flow_tag = p.flow_tag;
    inject(r);
    emit(n, port, f.src, r);
    release(r.uid);
  }

  // ------------------------------------------------------------ balancers

  void balancer_receive(int n, int port, const Frame& f) {
    Node& node = nodes_[n];
    auto it = node.ifaces.find(port);
    if (it == node.ifaces.end() || !f.packet) return;
    const RoutedPort& rp = it->second;
    if (f.tag) {
      drop_packet(n, *f.packet, f.tag->vid, DropReason::VlanFilter);
      return;
    }
    if (handle_arp(n, port, f, [&](Ipv4Address a) { return rp.has(a); })) return;
    if (f.dst != rp.mac) return;
    const Packet& p = *f.packet;

    bool mine = false;
    for (const auto& [pp, other] : node.ifaces) mine |= other.has(p.dst_ip);
    if (mine) {
      note_delivered(n, p);
      if (p.protocol == Protocol::Probe && p.op == PacketOp::Reply && rp.path) {
        const std::size_t seen = node.lb->transitions().size();
        node.lb->on_probe_reply(*rp.path, now_);
        trace(n, TraceEv::Probe, std::nullopt, &p, "reply path=" + path_name(*rp.path) + " seq=" + std::to_string(p.ident));
        trace_transitions(n, seen);
      } else {
        answer_locally(n, port, f);
      }
      return;
    }

    if (rp.path) node.lb->pin(flow_key(p).reversed(), *rp.path);
    auto route = node.lb_routes.lookup(p.dst_ip);
    if (!route) {
      drop_packet(n, p, std::nullopt, DropReason::NoRoute);
      return;
    }
    const LbRoute& r = *route->second;
    if (r.balanced) {
      auto path = node.lb->dispatch(flow_key(p));
      if (!path) {
        drop_packet(n, p, std::nullopt, DropReason::Unavailable);
        return;
      }
      node.dispatched[*path]++;
      node.last_dispatch[*path] = now_;
      const int out = node.path_port[*path];
      send_ip(n, out, *node.ifaces.at(out).next_hop, p);
    } else {
      send_ip(n, r.port, r.gateway.value_or(p.dst_ip), p);
    }
  }

  void trace_transitions(int n, std::size_t seen) {
    const auto& tr = nodes_[n].lb->transitions();
    for (std::size_t i = seen; i < tr.size(); ++i)
      trace(n, tr[i].state == PathState::Up ? TraceEv::PathUp : TraceEv::PathDown, std::nullopt, nullptr,
            "path=" + path_name(tr[i].path));
  }

  void probe_tick(int n) {
    Node& node = nodes_[n];
    if (!node.up) return;
    const std::size_t seen = node.lb->transitions().size();
    auto reqs = node.lb->probe_tick(now_);
    trace_transitions(n, seen);
    for (const auto& req : reqs) {
      const int port = node.path_port[req.path];
      const RoutedPort& rp = node.ifaces.at(port);
      Packet p = make_packet(Protocol::Probe, rp.source_for(*rp.next_hop), 0, *rp.peer, 0, 0);
      p.op = PacketOp::Request;
      p.ident = req.seq;
      inject(p);
      trace(n, TraceEv::Probe, std::nullopt, &p, "request path=" + path_name(req.path) + " seq=" + std::to_string(req.seq));
      send_ip(n, port, *rp.next_hop, p);
      release(p.uid);
    }
  }

  // ---------------------------------------------------------------- ticks

  void age_tick() {
    for (auto& n : nodes_) {
      if (!n.up) continue;
      if (n.sw) n.sw->age_fdb(now_);
      if (n.l3) n.l3->conn_table().sweep(now_);
      if (n.fw) n.fw->sweep_expired(now_);
    }
  }

  void apply_fault(FaultAction action, const std::string& target) {
    trace(-1, TraceEv::Fault, std::nullopt, nullptr, std::string(to_string(action)) + " target=" + target);
    if (auto li = link_index_.find(target); li != link_index_.end()) {
      LinkState& L = links_[li->second];
      const bool up = action == FaultAction::Recover;
      if (L.link.up() != up) L.epoch++;
      L.link.set_up(up);
      for (auto [n, port] : L.ends)
        if (nodes_[n].sw && nodes_[n].sw->has_port(port)) nodes_[n].sw->set_link(port, up);
      return;
    }
    Node& node = nodes_[node_index_.at(target)];
    if (action == FaultAction::FailNode) {
      if (!node.up) return;
      node.up = false;
      drain(node_index_.at(target), DropReason::NodeDown);
    } else if (!node.up) {
      node.up = true;
      drain(node_index_.at(target), DropReason::NodeDown);
      if (node.sw) node.sw->clear_dynamic();
      if (node.l3) node.l3->conn_table().clear();
      if (node.fw) node.fw->reset_dynamic();
      if (node.lb) node.lb->reset();
    }
  }

  // Drops everything a node is holding and forgets learned neighbours.
  void drain(int n, DropReason why) {
    Node& node = nodes_[n];
    auto pending = std::move(node.arp.pending);
    node.arp.pending.clear();
    node.arp.cache.clear();
    for (auto& [k, pend] : pending)
      for (const auto& p : pend.packets) {
        drop_packet(n, p, std::nullopt, why);
        release(p.uid);
      }
    if (node.fw)
      for (const auto& q : node.fw->drain()) {
        drop_packet(n, q.packet, std::nullopt, why);
        release(q.packet.uid);
      }
  }

  // -------------------------------------------------------------- traffic

  Packet new_packet(int gi, Protocol proto, std::uint32_t payload) {
    Generator& g = gens_[gi];
    const HostDecl& h = *nodes_[g.src].host;
    std::uint16_t dport = proto == Protocol::Tcp ? 5001 : 9;
    Packet p = make_packet(proto, h.addr.ip, g.sport, g.dst, dport, payload);
    p.flow_tag = gi;
    return p;
  }

  void launch(int gi, Packet p) {
    Generator& g = gens_[gi];
    inject(p);
    g.stats.sent_packets++;
    g.stats.sent_bytes += p.network_bytes();
    if (!g.stats.first_sent) g.stats.first_sent = now_;
    host_send(g.src, p);
    release(p.uid);
  }

  Time stop_time(const Generator& g) const { return g.decl.stop.value_or(std::numeric_limits<Time>::max()); }

  void cbr_send(int gi) {
    Generator& g = gens_[gi];
    if (now_ >= stop_time(g)) return;
    if (nodes_[g.src].up) launch(gi, new_packet(gi, Protocol::Udp, g.decl.packet_bytes - 28));
    g.sent_count++;
    const unsigned __int128 bits = static_cast<unsigned __int128>(g.sent_count) * g.decl.packet_bytes * 8 * 1'000'000;
    Time next = g.start + static_cast<Time>(bits / g.decl.rate_bps);
    schedule(std::max(next, now_), [this, gi] { cbr_send(gi); });
  }

  void bulk_refill(int gi) {
    Generator& g = gens_[gi];
    g.refill_pending = false;
    if (!nodes_[g.src].up || now_ >= stop_time(g)) return;
    while (g.sent_payload < g.decl.total_bytes) {
      const std::uint32_t seg = static_cast<std::uint32_t>(std::min<std::uint64_t>(kMss, g.decl.total_bytes - g.sent_payload));
      if (g.in_flight + seg > kWindowBytes) break;
      g.sent_payload += seg;
      g.in_flight += seg;
      launch(gi, new_packet(gi, Protocol::Tcp, seg));
    }
  }

  void ping_send(int gi) {
    Generator& g = gens_[gi];
    if (g.sent_count >= g.decl.count || now_ >= stop_time(g)) return;
    if (nodes_[g.src].up) {
      Packet p = new_packet(gi, Protocol::Icmp, 56);
      p.op = PacketOp::Request;
      p.ident = g.ident;
      launch(gi, p);
    }
    g.sent_count++;
    schedule(now_ + g.decl.interval, [this, gi] { ping_send(gi); });
  }

  void flow_delivered(const LedgerEntry& e) {
    Generator& g = gens_[e.flow];
    if (g.decl.kind == TrafficKind::Ping && e.op == PacketOp::Reply) return;
    auto& s = g.stats;
    s.delivered_packets++;
    s.delivered_bytes += e.bytes;
    s.delivered_payload += e.payload;
    if (!s.first_delivery) s.first_delivery = now_;
    s.last_delivery = now_;
    const std::size_t w = static_cast<std::size_t>(now_ / opt_.window);
    if (s.windows.size() <= w) s.windows.resize(w + 1, 0);
    s.windows[w] += e.bytes;
    if (g.decl.kind == TrafficKind::Bulk) {
      if (s.delivered_payload == g.decl.total_bytes) s.completed = now_;
      window_freed(e.flow, e.payload);
    }
  }

  void flow_dropped(const LedgerEntry& e) {
    Generator& g = gens_[e.flow];
    if (g.decl.kind == TrafficKind::Ping && e.op == PacketOp::Reply) return;
    g.stats.dropped_packets++;
    if (g.decl.kind == TrafficKind::Bulk) window_freed(e.flow, e.payload);
  }

  void window_freed(int gi, std::uint32_t payload) {
    Generator& g = gens_[gi];
    g.in_flight -= payload;
    if (!g.refill_pending && g.sent_payload < g.decl.total_bytes) {
      g.refill_pending = true;
      schedule(now_, [this, gi] { bulk_refill(gi); });
    }
  }

  ScenarioConfig cfg_;
  EngineOptions opt_;
  EngineHooks hooks_;
  std::mt19937_64 rng_;
  bool tracing_ = false;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  Time now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t events_ = 0;

  std::vector<Node> nodes_;
  std::map<std::string, int> node_index_;
  std::vector<LinkState> links_;
  std::map<std::string, int> link_index_;
  std::unordered_map<std::uint32_t, int> host_by_ip_;
  std::vector<Generator> gens_;
  std::uint64_t arp_gen_ = 0;

  std::unordered_map<std::uint64_t, LedgerEntry> ledger_;
  std::uint64_t next_uid_ = 1;
  std::uint64_t injected_ = 0;
  std::uint64_t delivered_ = 0;
  std::array<std::uint64_t, kDropReasonCount> dropped_{};

  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  std::uint64_t trace_lines_ = 0;
  std::deque<std::string> tail_;
};

}  // namespace netfab
