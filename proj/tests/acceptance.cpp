// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "netfab/netfab.hpp"

using namespace netfab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

// ---------------------------------------------------------------- isolation

struct End {
  bool trunk = false;
  int vid = 0;          // access
  std::set<int> allowed;  // trunk
};

struct Topo {
  int switches = 0;
  int vlans = 0;
  struct Uplink {
    int child, parent;
    End child_end, parent_end;
    int child_port, parent_port;
  };
  std::vector<Uplink> uplinks;
  struct Host {
    int sw, port, vid;
  };
  std::vector<Host> hosts;
};

Topo random_topo(std::mt19937_64& rng) {
  Topo t;
  t.switches = 1 + static_cast<int>(rng() % 8);
  t.vlans = 1 + static_cast<int>(rng() % 16);
  std::vector<int> next_port(t.switches, 1);
  auto end = [&] {
    End e;
    if (rng() % 4) {
      e.trunk = true;
      for (int v = 1; v <= t.vlans; ++v)
        if (rng() % 2) e.allowed.insert(v);
      if (e.allowed.empty()) e.allowed.insert(1 + static_cast<int>(rng() % t.vlans));
    } else {
      e.vid = 1 + static_cast<int>(rng() % t.vlans);
    }
    return e;
  };
  for (int s = 1; s < t.switches; ++s) {
    int p = static_cast<int>(rng() % s);
    t.uplinks.push_back({s, p, end(), end(), next_port[s]++, next_port[p]++});
  }
  int nh = 2 + static_cast<int>(rng() % 63);
  for (int h = 0; h < nh; ++h) {
    int s = static_cast<int>(rng() % t.switches);
    t.hosts.push_back({s, next_port[s]++, 1 + static_cast<int>(rng() % t.vlans)});
  }
  return t;
}

std::string mode_text(const End& e) {
  if (!e.trunk) return "access=" + std::to_string(e.vid);
  std::string s = "trunk=";
  bool first = true;
  for (int v : e.allowed) {
    s += (first ? "" : ",") + std::to_string(v);
    first = false;
  }
  return s;
}

std::string topo_text(const Topo& t) {
  std::ostringstream o;
  o << "[vlan]\n";
  for (int v = 1; v <= t.vlans; ++v) o << "vid=" << v << " name=V" << v << " kind=beamline\n";
  o << "[switch]\n";
  for (int s = 0; s < t.switches; ++s) {
    o << "id=s" << s << "\n";
    for (const auto& u : t.uplinks) {
      if (u.child == s) o << "port=s" << s << ":" << u.child_port << " " << mode_text(u.child_end) << "\n";
      if (u.parent == s) o << "port=s" << s << ":" << u.parent_port << " " << mode_text(u.parent_end) << "\n";
    }
    for (const auto& h : t.hosts)
      if (h.sw == s) o << "port=s" << s << ":" << h.port << " access=" << h.vid << "\n";
  }
  o << "[host]\n";
  for (std::size_t i = 0; i < t.hosts.size(); ++i)
    o << "id=h" << i << " ip=10." << i / 250 << "." << i % 250 << ".1/24 beamline=V" << t.hosts[i].vid << "\n";
  o << "[link]\n";
  for (std::size_t i = 0; i < t.uplinks.size(); ++i) {
    const auto& u = t.uplinks[i];
    o << "id=u" << i << " a=s" << u.child << ":" << u.child_port << " b=s" << u.parent << ":" << u.parent_port
      << " bw=1G\n";
  }
  for (std::size_t i = 0; i < t.hosts.size(); ++i)
    o << "id=e" << i << " a=h" << i << ":0 b=s" << t.hosts[i].sw << ":" << t.hosts[i].port << " bw=1G\n";
  return o.str();
}

// Hosts that hear a broadcast from host `from`: a walk over (switch, vlan)
// states where a frame leaves a port untagged (access, same vid) or tagged
// (trunk allowing the vid) and is re-classified by the far end's mode.
std::set<int> oracle_domain(const Topo& t, int from) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> todo{{t.hosts[from].sw, t.hosts[from].vid}};
  auto cross = [](const End& out, const End& in, int vid) -> int {
    bool tagged;
    if (out.trunk) {
      if (!out.allowed.count(vid)) return 0;
      tagged = true;
    } else {
      if (out.vid != vid) return 0;
      tagged = false;
    }
    if (tagged) return in.trunk && in.allowed.count(vid) ? vid : 0;
    return in.trunk ? 0 : in.vid;
  };
  while (!todo.empty()) {
    auto cur = todo.back();
    todo.pop_back();
    if (!seen.insert(cur).second) continue;
    auto [s, v] = cur;
    for (const auto& u : t.uplinks) {
      if (u.child == s)
        if (int w = cross(u.child_end, u.parent_end, v)) todo.push_back({u.parent, w});
      if (u.parent == s)
        if (int w = cross(u.parent_end, u.child_end, v)) todo.push_back({u.child, w});
    }
  }
  std::set<int> out;
  for (std::size_t h = 0; h < t.hosts.size(); ++h)
    if (static_cast<int>(h) != from && seen.count({t.hosts[h].sw, t.hosts[h].vid})) out.insert(static_cast<int>(h));
  return out;
}

Outcome isolation_property() {
  const int kTopologies = 500;
  std::mt19937_64 rng(20240601);
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t mismatches = 0, frames = 0, checked = 0;
  std::string first_bad;
  for (int trial = 0; trial < kTopologies; ++trial) {
    Topo t = random_topo(rng);
    ScenarioConfig c = load_scenario(topo_text(t));
    Engine e(c);
    const int n = static_cast<int>(t.hosts.size());
    std::map<MacAddress, int> by_mac;
    for (int h = 0; h < n; ++h) by_mac[e.host_mac("h" + std::to_string(h))] = h;
    // heard[phase][sender] = receivers
    std::map<std::pair<int, int>, std::set<int>> heard;
    int phase = 0;
    e.hooks().on_host_receive = [&](const std::string& host, const Frame& f) {
      auto it = by_mac.find(f.src);
      if (it != by_mac.end()) heard[{phase, it->second}].insert(std::stoi(host.substr(1)));
    };
    std::vector<int> unicast_dst(n);
    for (int h = 0; h < n; ++h) {
      unicast_dst[h] = static_cast<int>(rng() % (n - 1));
      if (unicast_dst[h] >= h) unicast_dst[h]++;
    }
    for (int h = 0; h < n; ++h) {
      const std::string id = "h" + std::to_string(h);
      e.schedule(h * kMillisecond, [&, id] {
        phase = 0;
        e.send_frame(id, Frame::raw(e.host_mac(id), MacAddress::broadcast(), 64));
      });
      e.schedule(100 * kMillisecond + h * kMillisecond, [&, id, h] {
        phase = 1;
        e.send_frame(id, Frame::raw(e.host_mac(id), e.host_mac("h" + std::to_string(unicast_dst[h])), 64));
      });
    }
    e.run_until(kSecond);
    for (int h = 0; h < n; ++h) {
      std::set<int> dom = oracle_domain(t, h);
      std::set<int> want_u;
      if (dom.count(unicast_dst[h])) want_u.insert(unicast_dst[h]);
      for (int ph = 0; ph < 2; ++ph) {
        frames++;
        const std::set<int>& want = ph == 0 ? dom : want_u;
        if (heard[{ph, h}] != want) {
          if (!mismatches++) first_bad = "topology " + std::to_string(trial) + " host h" + std::to_string(h);
        }
      }
    }
    checked++;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = mismatches == 0 && checked >= 500 && secs < 60;
  o.detail = std::to_string(checked) + " topologies, " + std::to_string(frames) + " frames, " +
             std::to_string(mismatches) + " mismatches, " + fmt("%.1f s", secs) +
             (first_bad.empty() ? "" : " (first: " + first_bad + ")");
  return o;
}

// ---------------------------------------------------------------- spoofing

Outcome spoofing_pair() {
  auto legacy = *bundled_scenario("spring8-legacy");
  auto upgraded = *bundled_scenario("spring8-upgraded");
  SpoofOutcome l = run_spoof(legacy), u = run_spoof(upgraded);
  VerifyResult vl = verify(legacy, "isolation"), vu = verify(upgraded, "isolation");
  Outcome o;
  o.pass = l.frames_to_victim_ports > 0 && u.frames_to_victim_ports == 0 && !vl.pass && vu.pass;
  o.detail = "legacy: " + std::to_string(l.frames_to_victim_ports) + " frames into " + l.plan.victim_beamline +
             " ports, verify " + (vl.pass ? "pass" : "fail") + "; upgraded: " +
             std::to_string(u.frames_to_victim_ports) + " frames, verify " + (vu.pass ? "pass" : "fail");
  return o;
}

// ---------------------------------------------------------------- firewall path

std::string capped_path(const std::string& traffic, Time duration) {
  return "[engine]\nname=capped seed=5 duration=" + detail::format_seconds(duration) +
         "\n"
         "[firewall]\nid=fw1 cap=170M inside=10.1.0.0/16\n"
         "iface=fw1:1 ip=10.1.1.1/24 zone=dmz\n"
         "iface=fw1:2 ip=192.0.2.1/24 zone=public\n"
         "[host]\nid=a ip=10.1.1.10/24 gw=10.1.1.1 beamline=BL01\nid=b ip=192.0.2.10/24 gw=192.0.2.1\n"
         "[link]\nid=la a=a:0 b=fw1:1 bw=1G\nid=lb a=fw1:2 b=b:0 bw=1G\n"
         "[masquerade]\nnode=fw1 scope=0.0.0.0/0 ext=192.0.2.1\n"
         "[traffic]\n" +
         traffic;
}

Outcome firewall_throughput() {
  const Time dur = 30 * kSecond;
  auto c = load_scenario(capped_path("id=load kind=bulk src=a dst=b total=100G\n", dur + kSecond));
  Engine e(c);
  e.run_until(dur + kSecond);
  const auto& f = e.flow("load");
  std::uint64_t bytes = 0;
  for (std::size_t w = 0; w < 30 && w < f.windows.size(); ++w) bytes += f.windows[w];
  double mbps = static_cast<double>(bytes) * 8 / 30.0 / 1e6;
  double offered = static_cast<double>(e.link("la").stats(0).bytes) * 8 / 31.0 / 1e6;
  Outcome o;
  o.pass = std::abs(mbps - 170.0) <= 170.0 * 0.02;
  o.detail = "goodput " + fmt("%.2f", mbps) + " Mbit/s over 30 s (target 170 +/- 2%), sender link carried " +
             fmt("%.0f", offered) + " Mbit/s";
  return o;
}

Outcome transfer_time() {
  const std::uint64_t total = 1'000'000'000;
  auto c = load_scenario(capped_path("id=gb kind=bulk src=a dst=b total=1G\n", 120 * kSecond));
  Engine e(c);
  e.run_until(120 * kSecond);
  const auto& f = e.flow("gb");
  const double bound = bulk_transfer_time(170'000'000, total);
  Outcome o;
  if (!f.completed) {
    o.detail = "transfer did not complete in 120 s";
    return o;
  }
  double secs = static_cast<double>(*f.completed - *f.first_sent) / 1e6;
  o.pass = std::abs(secs - bound) <= bound * 0.05;
  o.detail = "1 GB in " + fmt("%.2f s", secs) + " (bound " + fmt("%.2f s", bound) + ", " +
             fmt("%+.2f%%", (secs / bound - 1) * 100) + "); 100 GB scales to " + fmt("%.0f s", secs * 100);
  return o;
}

// ---------------------------------------------------------------- uplinks

double stream_loss(const std::string& uplink_bw) {
  const std::string text =
      "[engine]\nname=uplink seed=2 duration=61\n"
      "[vlan]\nvid=10 name=BL01 kind=beamline\n"
      "[switch]\nid=s1\nport=s1:1 access=10\nport=s1:2 access=10\nid=s2\nport=s2:1 access=10\nport=s2:2 access=10\n"
      "[host]\nid=det ip=10.1.1.10/24 beamline=BL01\nid=ws ip=10.1.1.20/24 beamline=BL01\n"
      "[link]\nid=l1 a=det:0 b=s1:1 bw=100M\nid=up a=s1:2 b=s2:1 bw=" +
      uplink_bw +
      "\nid=l2 a=s2:2 b=ws:0 bw=100M\n"
      "[traffic]\nid=frames kind=cbr src=det dst=ws rate=34.13M size=1500 stop=60\n";
  Engine e(load_scenario(text));
  e.run_until(61 * kSecond);
  const auto& f = e.flow("frames");
  return 1.0 - static_cast<double>(f.delivered_bytes) / static_cast<double>(f.sent_bytes);
}

Outcome uplink_upgrade() {
  double slow = stream_loss("10M"), fast = stream_loss("100M");
  Outcome o;
  o.pass = slow > 0.65 && fast < 0.001;
  o.detail = "34.13 Mbit/s for 60 s: loss " + fmt("%.1f%%", slow * 100) + " over 10M, " + fmt("%.3f%%", fast * 100) +
             " over 100M";
  return o;
}

// ---------------------------------------------------------------- failover

Outcome failover() {
  auto red = *bundled_scenario("spring8-redundant");
  VerifyResult r = verify(red, "failover");
  bool dispatch_ok = true;
  std::string last;
  for (const auto& b : r.metrics.balancers) {
    const auto& t = b.last_dispatch[0];
    if (t && *t > 14 * kSecond) dispatch_ok = false;
    last += b.id + "->fw1 last " + (t ? detail::format_seconds(*t) + " s" : std::string("never")) + ", ";
  }
  const FlowStats* nc = r.metrics.flow("fo-new-connection");
  bool new_ok = nc && nc->completed && nc->first_sent && *nc->first_sent >= 15 * kSecond;

  auto both = red;
  both.traffic.clear();
  both.faults = {{10 * kSecond, FaultAction::FailNode, "fw1"}, {10 * kSecond, FaultAction::FailNode, "fw2"}};
  TrafficDecl ping;
  ping.id = "after-both";
  ping.kind = TrafficKind::Ping;
  ping.src = spring8::host_of(1, 1);
  ping.dst = "oa-a1";
  ping.count = 3;
  ping.start = 15 * kSecond;
  both.traffic.push_back(ping);
  Engine eb(both);
  eb.run_until(20 * kSecond);
  auto mb = eb.metrics();
  std::uint64_t unavailable = 0;
  for (const auto& b : mb.balancers) unavailable += b.unavailable;
  bool unavailable_ok = unavailable > 0 && mb.dropped[static_cast<int>(DropReason::Unavailable)] > 0 &&
                        mb.flow("after-both")->replies == 0;

  VerifyResult plain = verify(*bundled_scenario("spring8-upgraded"), "failover");
  const FlowStats* s = plain.metrics.flow("fo-stream");
  std::uint64_t after = 0;
  for (std::size_t w = 11; w < s->windows.size(); ++w) after += s->windows[w];
  bool persists = !plain.pass && after == 0;

  Outcome o;
  o.pass = r.pass && dispatch_ok && new_ok && unavailable_ok && persists;
  o.detail = last + "switchover " + *r.find("switchover_us") + " us, new connection done at " +
             *r.find("new_connection_completed_us") + " us; both down: " + std::to_string(unavailable) +
             " unavailable dispatches; upgraded: " + std::to_string(after) + " stream bytes after 11 s";
  return o;
}

// ---------------------------------------------------------------- NAT

Outcome nat_capacity() {
  auto c = *bundled_scenario("spring8-redundant");
  c.traffic.clear();
  std::vector<const HostDecl*> inside;
  for (const auto& h : c.hosts)
    if (!h.beamline.empty() && h.beamline.rfind("BL", 0) == 0) inside.push_back(&h);
  // one host from each beamline first, then second hosts
  std::stable_sort(inside.begin(), inside.end(), [](const HostDecl* a, const HostDecl* b) {
    return a->id.substr(a->id.find("-h")) < b->id.substr(b->id.find("-h"));
  });
  inside.resize(64);
  std::map<std::uint32_t, std::string> dst_of;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    TrafficDecl t;
    t.id = "nat" + std::to_string(i);
    t.kind = TrafficKind::Ping;
    t.src = inside[i]->id;
    t.dst = i % 2 ? "oa-b1" : "oa-a1";
    t.count = 5;
    t.start = kSecond;
    c.traffic.push_back(t);
    dst_of[inside[i]->addr.ip.value] = t.dst;
  }
  Engine e(c);
  e.run_until(3 * kSecond);

  // Expected external address: longest matching declared scope of that firewall.
  auto expected = [&](const std::string& fw, Ipv4Address dst) -> std::optional<Ipv4Address> {
    int best = -1;
    std::optional<Ipv4Address> ext;
    for (const auto& m : c.masquerades)
      if (m.node == fw && m.scope.contains(dst) && m.scope.prefix_len > best) best = m.scope.prefix_len, ext = m.external;
    return ext;
  };
  std::set<std::tuple<std::uint32_t, std::uint16_t, int>> outside;
  std::set<std::uint32_t> seen_inside;
  std::size_t entries = 0, scope_ok = 0;
  std::set<std::uint32_t> externals_used;
  for (const auto& fd : c.firewalls) {
    for (const auto& n : e.firewall(fd.id).nat_entries()) {
      auto it = dst_of.find(n.inside.ip.value);
      if (it == dst_of.end()) continue;
      entries++;
      seen_inside.insert(n.inside.ip.value);
      outside.insert({n.outside.ip.value, n.outside.port, static_cast<int>(n.protocol)});
      auto want = expected(fd.id, c.find_host(it->second)->addr.ip);
      if (want && *want == n.outside.ip) scope_ok++;
      externals_used.insert(n.outside.ip.value);
    }
  }
  e.run_until(10 * kSecond);
  std::uint64_t sent = 0, replies = 0, misdelivered = 0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    const auto& f = e.flow("nat" + std::to_string(i));
    sent += f.sent_packets;
    replies += f.replies;
    misdelivered += f.misdelivered;
  }
  Outcome o;
  o.pass = seen_inside.size() == 64 && entries == 64 && outside.size() == 64 && misdelivered == 0 && replies == sent &&
           scope_ok == entries && externals_used.size() >= 2;
  o.detail = std::to_string(seen_inside.size()) + " inside hosts, " + std::to_string(outside.size()) +
             " unique outside tuples, " + std::to_string(replies) + "/" + std::to_string(sent) + " replies, " +
             std::to_string(misdelivered) + " misdelivered, scope-matched " + std::to_string(scope_ok) + "/" +
             std::to_string(entries) + " over " + std::to_string(externals_used.size()) + " external addresses";
  return o;
}

// ---------------------------------------------------------------- scale

Outcome scale() {
  std::string text = serialize_scenario(*bundled_scenario("spring8-redundant"));
  auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c = load_scenario(text);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Engine e(c);
  std::string core;
  std::size_t most = 0;
  for (const auto& s : c.switches)
    if (s.layer3 && e.router(s.id).interfaces().size() > most) most = e.router(s.id).interfaces().size(), core = s.id;
  L3Switch r = e.router(core);
  std::size_t pairs = 0, one_hop = 0;
  for (const auto& [vi, a] : r.interfaces()) {
    for (const auto& [vj, b] : r.interfaces()) {
      if (vi == vj) continue;
      pairs++;
      Ipv4Address dst(b.network().base.value + 9);
      if (b.prefix_len > 28) dst = Ipv4Address(b.ip.value == b.network().base.value + 1 ? b.ip.value + 1 : b.ip.value - 1);
      auto route = r.route_lookup(dst);
      if (!route) continue;
      auto* vid = std::get_if<VlanId>(&route->next_hop);
      if (!vid || *vid != vj) continue;
      // same-zone traffic must also clear the ACL in one forwarding step
      if (a.zone == b.zone) {
        Packet p = make_packet(Protocol::Udp, Ipv4Address(a.network().base.value + 2), 1, dst, 9, 10);
        auto fwd = r.forward(p, vi, 0);
        auto* ok = std::get_if<Forwarded>(&fwd);
        if (!ok || ok->egress != vj || ok->next_hop != dst || ok->packet.ttl != 63) continue;
      }
      one_hop++;
    }
  }
  Outcome o;
  o.pass = most >= 66 && one_hop == pairs && secs < 5.0;
  o.detail = core + " has " + std::to_string(most) + " VLAN interfaces; " + std::to_string(one_hop) + "/" +
             std::to_string(pairs) + " interface pairs routed in one hop; load+validate " + fmt("%.3f s", secs);
  return o;
}

// ---------------------------------------------------------------- determinism

Outcome determinism() {
  bool all = true;
  std::string text;
  for (const auto& b : bundled_scenarios()) {
    auto c = b.build({});
    std::string traces[3];
    for (int k = 0; k < 3; ++k) {
      std::ostringstream os;
      auto run = c;
      if (k == 2) run.engine.seed += 1;
      Engine e(run, {&os, false});
      e.run();
      traces[k] = os.str();
    }
    const bool same = !traces[0].empty() && traces[0] == traces[1];
    all = all && same;
    text += std::string(b.name) + (same ? " identical" : " DIFFER") + " (" + std::to_string(traces[0].size()) +
            " bytes, seed+1 " + (traces[2] == traces[0] ? "same" : "differs") + "); ";
  }
  Outcome o;
  o.pass = all;
  o.detail = text;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"isolation-property", isolation_property}, {"spoofing-before-after", spoofing_pair},
      {"firewall-throughput", firewall_throughput}, {"transfer-time", transfer_time},
      {"uplink-upgrade", uplink_upgrade},           {"failover", failover},
      {"nat-capacity", nat_capacity},               {"scale-66-vlans", scale},
      {"determinism", determinism},
  };
  int failed = 0, i = 0;
  for (const auto& c : criteria) {
    ++i;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.detail = std::string("error: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", i - failed, i);
  return failed ? 1 : 0;
}
