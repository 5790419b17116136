#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netfab/engine.hpp"

namespace netfab {

inline const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names = {"isolation", "zone-policy", "nat-bijection", "failover",
                                                 "determinism"};
  return names;
}

struct VerifyResult {
  std::string invariant;
  bool pass = false;
  std::string summary;
  // Ordered key=value facts for the report.
  std::vector<std::pair<std::string, std::string>> facts;
  std::vector<std::string> excerpt;  // trace lines around the first violation
  Metrics metrics;

  void fact(std::string k, std::string v) { facts.emplace_back(std::move(k), std::move(v)); }
  void fact(std::string k, std::uint64_t v) { facts.emplace_back(std::move(k), std::to_string(v)); }
  const std::string* find(std::string_view k) const {
    for (const auto& [key, v] : facts)
      if (key == k) return &v;
    return nullptr;
  }
};

namespace detail {

inline constexpr std::size_t kExcerptLines = 24;

inline int zone_trust(Zone z) {
  switch (z) {
    case Zone::Public: return 0;
    case Zone::Dmz: return 1;
    case Zone::Clean: return 2;
  }
  return 0;
}

// Zone of the router interface whose subnet holds `ip`, preferring the
// longest prefix.
inline std::optional<Zone> zone_of(const ScenarioConfig& c, Ipv4Address ip) {
  std::optional<Zone> z;
  int best = -1;
  for (const auto& i : c.interfaces)
    for (const auto& a : i.addrs)
      if (a.network().contains(ip) && a.prefix_len > best) {
        best = a.prefix_len;
        z = i.zone;
      }
  return z;
}

inline const LinkDecl* link_at(const ScenarioConfig& c, const std::string& node, int port) {
  for (const auto& l : c.links)
    if ((l.a.node == node && l.a.port == port) || (l.b.node == node && l.b.port == port)) return &l;
  return nullptr;
}

inline PortRef far_end(const LinkDecl& l, const std::string& node) { return l.a.node == node ? l.b : l.a; }

}  // namespace detail

struct SpoofPlan {
  std::string victim_beamline;
  std::string victim_host;
  std::string attached_beamline;
  std::string spoofer = "spoofer";
  std::string switch_node;
  int port = 0;
};

// Adds a host on beamline B's switch, in B's port mode, that carries an
// address from beamline A and pings a host of A. Picks the first two
// beamlines in host order when names are not given.
inline std::optional<SpoofPlan> add_spoofer(ScenarioConfig& c, std::string victim = "", std::string attached = "") {
  std::vector<std::string> order;
  for (const auto& h : c.hosts)
    if (!h.beamline.empty() && std::find(order.begin(), order.end(), h.beamline) == order.end())
      order.push_back(h.beamline);
  if (victim.empty() && order.size() >= 2) victim = order[0];
  if (attached.empty())
    for (const auto& b : order)
      if (b != victim) {
        attached = b;
        break;
      }
  const HostDecl* vh = nullptr;
  const HostDecl* ah = nullptr;
  for (const auto& h : c.hosts) {
    if (!vh && h.beamline == victim) vh = &h;
    if (!ah && h.beamline == attached) ah = &h;
  }
  if (!vh || !ah || victim == attached) return std::nullopt;

  const LinkDecl* l = detail::link_at(c, ah->id, 0);
  if (!l) return std::nullopt;
  PortRef sw = detail::far_end(*l, ah->id);
  const PortDecl* mode = nullptr;
  int max_port = 0;
  for (const auto& p : c.ports)
    if (p.node == sw.node) {
      max_port = std::max(max_port, p.port);
      if (p.port == sw.port) mode = &p;
    }
  if (!mode) return std::nullopt;

  // Copies first: the pushes below invalidate pointers into c.
  const PortMode port_mode = mode->mode;
  const std::uint64_t bandwidth = l->bandwidth;
  const Time propagation = l->propagation;
  const InterfaceAddress victim_addr = vh->addr;
  const std::optional<Ipv4Address> victim_gw = vh->gateway;
  SpoofPlan plan{victim, vh->id, attached, "spoofer", sw.node, max_port + 1};
  while (c.find_host(plan.spoofer)) plan.spoofer += "_";
  // An unused address in the victim's subnet, counting down from the top.
  Ipv4Network net = victim_addr.network();
  std::set<std::uint32_t> used;
  for (const auto& h : c.hosts) used.insert(h.addr.ip.value);
  for (const auto& i : c.interfaces)
    for (const auto& a : i.addrs) used.insert(a.ip.value);
  std::uint32_t ip = (net.base.value | ~net.mask()) - 5;
  while (used.count(ip) && ip > net.base.value + 1) --ip;

  HostDecl h;
  h.id = plan.spoofer;
  h.addr = InterfaceAddress{Ipv4Address(ip), victim_addr.prefix_len};
  h.gateway = victim_gw;
  h.beamline = attached;
  c.hosts.push_back(h);
  c.ports.push_back({sw.node, plan.port, port_mode, std::nullopt});
  std::string lid = "spoof-link";
  while (std::any_of(c.links.begin(), c.links.end(), [&](const LinkDecl& x) { return x.id == lid; })) lid += "_";
  c.links.push_back({lid, {plan.spoofer, 0}, {sw.node, plan.port}, bandwidth, propagation});
  TrafficDecl t;
  t.id = plan.spoofer + "-ping";
  t.kind = TrafficKind::Ping;
  t.src = plan.spoofer;
  t.dst = plan.victim_host;
  t.count = 3;
  t.start = kSecond / 2;
  c.traffic.push_back(t);
  normalize_scenario(c);
  return plan;
}

// Frames carrying the spoofer's source MAC that switches put on links toward
// the victim beamline's hosts.
struct SpoofOutcome {
  SpoofPlan plan;
  std::uint64_t frames_to_victim_ports = 0;
  std::uint64_t victim_received = 0;  // accepted by a victim-beamline NIC
  Metrics metrics;
};

inline SpoofOutcome run_spoof(ScenarioConfig c, Time until = 3 * kSecond) {
  auto plan = add_spoofer(c);
  if (!plan) throw Error(Errc::InvalidArgument, "scenario needs two beamlines with hosts");
  c.traffic.erase(std::remove_if(c.traffic.begin(), c.traffic.end(),
                                 [&](const TrafficDecl& t) { return t.src != plan->spoofer; }),
                  c.traffic.end());
  std::set<std::pair<std::string, int>> victim_ports;
  std::set<std::string> victims;
  for (const auto& h : c.hosts)
    if (h.beamline == plan->victim_beamline) {
      victims.insert(h.id);
      if (const LinkDecl* l = detail::link_at(c, h.id, 0)) {
        PortRef p = detail::far_end(*l, h.id);
        victim_ports.insert({p.node, p.port});
      }
    }
  Engine e(c);
  SpoofOutcome out{*plan, 0, 0, {}};
  const MacAddress smac = e.host_mac(plan->spoofer);
  e.hooks().on_transmit = [&](const std::string& node, int port, const Frame& f) {
    if (f.src == smac && victim_ports.count({node, port})) out.frames_to_victim_ports++;
  };
  e.hooks().on_host_receive = [&](const std::string& host, const Frame& f) {
    if (f.src == smac && victims.count(host)) out.victim_received++;
  };
  e.run_until(until);
  out.metrics = e.metrics();
  return out;
}

namespace detail {

inline VerifyResult verify_isolation(ScenarioConfig c) {
  VerifyResult r;
  r.invariant = "isolation";
  auto plan = add_spoofer(c);
  if (plan) {
    r.fact("spoofer", plan->spoofer);
    r.fact("spoofer_attached", plan->switch_node + ":" + std::to_string(plan->port) + " (" + plan->attached_beamline + ")");
    r.fact("spoofed_segment", plan->victim_beamline);
  }
  EngineOptions o;
  o.trace_tail = kExcerptLines;
  Engine e(c, o);
  std::map<MacAddress, const HostDecl*> by_mac;
  for (const auto& h : c.hosts) by_mac[e.host_mac(h.id)] = &h;
  std::uint64_t violations = 0;
  std::string first;
  e.hooks().on_host_receive = [&](const std::string& host, const Frame& f) {
    auto it = by_mac.find(f.src);
    if (it == by_mac.end()) return;
    const HostDecl* rx = c.find_host(host);
    const HostDecl* tx = it->second;
    if (rx->beamline.empty() || tx->beamline.empty() || rx->beamline == tx->beamline) return;
    if (violations++ == 0) {
      first = "t=" + std::to_string(e.now()) + " host " + rx->id + " (" + rx->beamline + ") received a frame from " +
              tx->id + " (" + tx->beamline + ")";
      r.excerpt.assign(e.trace_tail().begin(), e.trace_tail().end());
    }
  };
  r.metrics = e.run();
  r.fact("cross_beamline_frames", violations);
  r.pass = violations == 0;
  r.summary = r.pass ? "no frame crossed a beamline boundary" : first;
  return r;
}

inline VerifyResult verify_zone_policy(ScenarioConfig c) {
  VerifyResult r;
  r.invariant = "zone-policy";
  // Unsolicited traffic from every lower-trust host toward the first host of
  // each higher-trust zone.
  std::map<Zone, const HostDecl*> first_in;
  std::vector<std::pair<const HostDecl*, Zone>> zoned;
  for (const auto& h : c.hosts)
    if (auto z = zone_of(c, h.addr.ip)) {
      zoned.push_back({&h, *z});
      first_in.try_emplace(*z, &h);
    }
  std::vector<TrafficDecl> extra;
  for (const auto& [h, z] : zoned) {
    if (!first_in.count(z) || first_in.at(z) != h) continue;
    for (const auto& [target_zone, target] : first_in) {
      if (zone_trust(target_zone) <= zone_trust(z)) continue;
      TrafficDecl t;
      t.id = "zp-" + h->id + "-" + target->id;
      t.kind = TrafficKind::Ping;
      t.src = h->id;
      t.dst = target->id;
      t.count = 3;
      t.start = kSecond;
      extra.push_back(t);
    }
  }
  for (auto& t : extra)
    if (std::none_of(c.traffic.begin(), c.traffic.end(), [&](const TrafficDecl& x) { return x.id == t.id; }))
      c.traffic.push_back(t);
  r.fact("probe_flows", static_cast<std::uint64_t>(extra.size()));

  EngineOptions o;
  o.trace_tail = kExcerptLines;
  Engine e(c, o);
  std::map<std::string, std::set<FlowKey>> initiated;
  std::map<std::string, Zone> zone_by_host;
  for (const auto& [h, z] : zoned) zone_by_host[h->id] = z;
  e.hooks().on_transmit = [&](const std::string& node, int, const Frame& f) {
    if (f.packet && f.packet->protocol != Protocol::Arp && zone_by_host.count(node))
      initiated[node].insert(flow_key(*f.packet));
  };
  std::uint64_t violations = 0, checked = 0;
  std::string first;
  e.hooks().on_deliver = [&](const std::string& node, const Packet& p) {
    auto hz = zone_by_host.find(node);
    if (hz == zone_by_host.end()) return;
    auto sz = zone_of(c, p.src_ip);
    if (!sz || zone_trust(*sz) >= zone_trust(hz->second)) return;
    checked++;
    if (initiated[node].count(flow_key(p).reversed())) return;
    if (violations++ == 0) {
      first = "t=" + std::to_string(e.now()) + " " + std::string(to_string(*sz)) + " source " + p.src_ip.to_string() +
              " reached " + to_string(hz->second) + " host " + node + " unsolicited";
      r.excerpt.assign(e.trace_tail().begin(), e.trace_tail().end());
    }
  };
  r.metrics = e.run();
  r.fact("cross_zone_deliveries", checked);
  r.fact("unsolicited_deliveries", violations);
  r.fact("acl_drops", r.metrics.dropped[static_cast<int>(DropReason::Acl)]);
  r.pass = violations == 0;
  r.summary = r.pass ? "no unsolicited delivery into a higher-trust zone" : first;
  return r;
}

inline VerifyResult verify_nat_bijection(ScenarioConfig c) {
  VerifyResult r;
  r.invariant = "nat-bijection";
  // Pings from up to 16 distinct beamline hosts toward the probe target.
  if (c.engine.probe_target && c.find_host(*c.engine.probe_target)) {
    std::set<std::string> seen;
    int n = 0;
    for (const auto& h : c.hosts) {
      if (h.beamline.empty() || !seen.insert(h.beamline).second) continue;
      TrafficDecl t;
      t.id = "nb-" + h.id;
      t.kind = TrafficKind::Ping;
      t.src = h.id;
      t.dst = *c.engine.probe_target;
      t.count = 3;
      t.start = kSecond + n * 1000;
      c.traffic.push_back(t);
      if (++n == 16) break;
    }
  }
  EngineOptions o;
  o.trace_tail = kExcerptLines;
  Engine e(c, o);
  std::uint64_t checks = 0, broken = 0;
  std::string first;
  std::function<void()> check = [&] {
    for (const auto& f : c.firewalls) {
      checks++;
      if (!e.firewall(f.id).nat_bijective() && broken++ == 0) {
        first = "t=" + std::to_string(e.now()) + " firewall " + f.id + " NAT table is not one-to-one";
        r.excerpt.assign(e.trace_tail().begin(), e.trace_tail().end());
      }
    }
    if (e.now() + c.engine.age_interval <= c.engine.duration) e.schedule(e.now() + c.engine.age_interval, check);
  };
  e.schedule(0, check);
  r.metrics = e.run();
  std::uint64_t mis = 0, pings = 0, answered = 0;
  for (const auto& f : r.metrics.flows)
    if (f.kind == TrafficKind::Ping) {
      mis += f.misdelivered;
      pings += f.sent_packets;
      answered += f.replies;
    }
  std::uint64_t entries = 0;
  for (const auto& f : r.metrics.firewalls) entries += f.nat_size;
  r.fact("table_checks", checks);
  r.fact("nat_entries_at_end", entries);
  r.fact("ping_requests", pings);
  r.fact("ping_replies", answered);
  r.fact("misdelivered_replies", mis);
  r.pass = broken == 0 && mis == 0;
  if (r.pass) r.summary = "every translation stayed one-to-one and every reply reached its origin";
  else if (broken) r.summary = first;
  else r.summary = std::to_string(mis) + " replies reverse-translated to the wrong host";
  return r;
}

inline VerifyResult verify_failover(ScenarioConfig c) {
  VerifyResult r;
  r.invariant = "failover";
  if (c.firewalls.empty() || !c.engine.probe_target || !c.find_host(*c.engine.probe_target)) {
    r.summary = "scenario needs a firewall and a probe_target host";
    return r;
  }
  // The failed firewall: one named by a fail_node fault, otherwise fw1 (or
  // the first firewall) failing at 10 s.
  std::string fw;
  Time fault_at = 10 * kSecond;
  for (const auto& f : c.faults)
    if (f.action == FaultAction::FailNode)
      for (const auto& d : c.firewalls)
        if (d.id == f.target && fw.empty()) {
          fw = f.target;
          fault_at = f.at;
        }
  if (fw.empty()) {
    fw = c.firewalls.front().id;
    for (const auto& d : c.firewalls)
      if (d.id == "fw1") fw = d.id;
    c.faults.push_back({fault_at, FaultAction::FailNode, fw});
  }
  c.engine.duration = std::max(c.engine.duration, fault_at + 20 * kSecond);
  const HostDecl* src = nullptr;
  for (const auto& h : c.hosts)
    if (!h.beamline.empty()) {
      src = &h;
      break;
    }
  if (!src) {
    r.summary = "scenario has no beamline host";
    return r;
  }
  const std::string dst = *c.engine.probe_target;
  const Time fresh = fault_at + 5 * kSecond;
  auto add = [&](TrafficDecl t) {
    t.src = src->id;
    t.dst = dst;
    c.traffic.push_back(t);
  };
  TrafficDecl stream;
  stream.id = "fo-stream";
  stream.rate_bps = 1'000'000;
  stream.start = kSecond;
  add(stream);
  TrafficDecl bulk;
  bulk.id = "fo-new-connection";
  bulk.kind = TrafficKind::Bulk;
  bulk.total_bytes = 1'000'000;
  bulk.start = fresh;
  add(bulk);
  TrafficDecl ping;
  ping.id = "fo-ping";
  ping.kind = TrafficKind::Ping;
  ping.count = 5;
  ping.start = fresh;
  add(ping);

  EngineOptions o;
  o.trace_tail = kExcerptLines;
  Engine e(c, o);
  r.metrics = e.run();
  r.fact("failed_firewall", fw);
  r.fact("fault_at_us", static_cast<std::uint64_t>(fault_at));

  // Which balancer path runs through the failed firewall.
  std::set<std::uint32_t> fw_addrs;
  for (const auto& i : c.interfaces)
    if (i.node == fw)
      for (const auto& a : i.addrs) fw_addrs.insert(a.ip.value);
  bool balanced = false, late_dispatch = false;
  std::optional<Time> switchover;
  for (const auto& b : r.metrics.balancers) {
    for (const auto& i : c.interfaces) {
      if (i.node != b.id || !i.path || !i.next_hop || !fw_addrs.count(i.next_hop->value)) continue;
      balanced = true;
      const int path = *i.path - 1;
      const BalancerConfig& bc = e.balancer(b.id).config();
      const Time bound = fault_at + bc.probe_interval * (bc.down_threshold + 1);
      const auto& last = b.last_dispatch[path];
      r.fact(b.id + ".last_dispatch_" + path_name(path) + "_us", last ? std::to_string(*last) : std::string("never"));
      r.fact(b.id + ".dispatch_bound_us", static_cast<std::uint64_t>(bound));
      if (last && *last > bound) late_dispatch = true;
      for (const auto& t : b.transitions)
        if (t.path == path && t.state == PathState::Down && t.at >= fault_at && (!switchover || t.at - fault_at < *switchover))
          switchover = t.at - fault_at;
    }
  }
  const FlowStats* s = r.metrics.flow("fo-stream");
  const FlowStats* nb = r.metrics.flow("fo-new-connection");
  const FlowStats* np = r.metrics.flow("fo-ping");
  // Delivered stream bytes in the last five windows of the run.
  std::uint64_t tail_bytes = 0;
  const std::size_t end_w = static_cast<std::size_t>(c.engine.duration / kSecond);
  for (std::size_t w = end_w >= 5 ? end_w - 5 : 0; w < end_w && w < s->windows.size(); ++w) tail_bytes += s->windows[w];
  r.fact("balanced", balanced ? "yes" : "no");
  r.fact("switchover_us", switchover ? std::to_string(*switchover) : std::string("none"));
  r.fact("stream_sent_packets", s->sent_packets);
  r.fact("stream_delivered_packets", s->delivered_packets);
  r.fact("stream_bytes_last_5s", tail_bytes);
  r.fact("new_connection_completed_us", nb->completed ? std::to_string(*nb->completed) : std::string("never"));
  r.fact("new_ping_replies", np->replies);
  r.fact("unavailable_drops", r.metrics.dropped[static_cast<int>(DropReason::Unavailable)]);

  const bool completed = nb->completed.has_value();
  r.pass = balanced && !late_dispatch && completed && tail_bytes > 0;
  if (r.pass) {
    r.summary = "traffic moved off " + fw + " after " + detail::format_seconds(*switchover) + " s";
  } else if (!balanced) {
    r.summary = "no balancer path bypasses " + fw + "; traffic loss persists to the end of the run (" +
                std::to_string(s->delivered_packets) + "/" + std::to_string(s->sent_packets) + " stream packets delivered)";
  } else if (late_dispatch) {
    r.summary = "packets were still dispatched to " + fw + " after the detection bound";
  } else {
    r.summary = "the connection opened after the fault did not complete";
  }
  if (!r.pass) r.excerpt.assign(e.trace_tail().begin(), e.trace_tail().end());
  return r;
}

inline VerifyResult verify_determinism(const ScenarioConfig& c) {
  VerifyResult r;
  r.invariant = "determinism";
  auto once = [&](std::uint64_t seed) {
    ScenarioConfig s = c;
    s.engine.seed = seed;
    EngineOptions o;
    o.digest = true;
    Engine e(s, o);
    return e.run();
  };
  Metrics a = once(c.engine.seed);
  Metrics b = once(c.engine.seed);
  Metrics other = once(c.engine.seed + 1);
  r.metrics = a;
  r.fact("seed", c.engine.seed);
  r.fact("digest_run1", a.trace_digest);
  r.fact("digest_run2", b.trace_digest);
  r.fact("trace_lines", a.trace_lines);
  r.fact("digest_other_seed", other.trace_digest);
  r.pass = a.trace_digest == b.trace_digest && a.trace_lines == b.trace_lines && a.events == b.events;
  r.summary = r.pass ? "two runs with the same seed produced identical traces"
                     : "trace digests differ between runs with the same seed";
  return r;
}

}  // namespace detail

inline VerifyResult verify(const ScenarioConfig& c, std::string_view invariant) {
  if (invariant == "isolation") return detail::verify_isolation(c);
  if (invariant == "zone-policy") return detail::verify_zone_policy(c);
  if (invariant == "nat-bijection") return detail::verify_nat_bijection(c);
  if (invariant == "failover") return detail::verify_failover(c);
  if (invariant == "determinism") return detail::verify_determinism(c);
  throw Error(Errc::UnknownInvariant, "unknown invariant '" + std::string(invariant) + "'");
}

}  // namespace netfab
