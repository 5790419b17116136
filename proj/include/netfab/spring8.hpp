#pragma once

#include <set>
#include <string>
#include <vector>

#include "netfab/scenario.hpp"
#include "netfab/scenario_io.hpp"

namespace netfab {

struct Spring8Options {
  int hosts_per_beamline = 8;
  int staff_hosts = 2;
  bool traffic = true;
  std::uint64_t seed = 1;
};

namespace spring8 {

inline constexpr int kBeamlines = 62;
inline constexpr int kL2Switches = 32;
inline constexpr int kL3Switches = 4;
inline constexpr int kFirewalls = 4;
inline constexpr int kMaxBeamlinesPerFirewall = 17;
inline constexpr int kMgmtVid = 100;
inline constexpr int kStaffVid = 163;  // 163, 164
inline constexpr std::uint64_t kGigabit = 1'000'000'000;
inline constexpr std::uint64_t kFast = 100'000'000;
inline constexpr std::uint64_t kTen = 10'000'000;
inline constexpr std::uint64_t kFirewallCap = 170'000'000;

// One user-LAN segment: mgmt, a beamline, or a staff VLAN.
struct Segment {
  int vid;
  std::string name;
  VlanKind kind;

  std::string net() const { return "10.1." + std::to_string(vid - 100); }
  Ipv4Network subnet() const { return Ipv4Network::parse(net() + ".0/24"); }
  Ipv4Address gateway() const { return Ipv4Address::parse(net() + ".1"); }
  Ipv4Address host_ip(int i) const { return Ipv4Address::parse(net() + "." + std::to_string(9 + i)); }
  InterfaceAddress gateway_if() const { return InterfaceAddress::parse(net() + ".1/24"); }
  std::string host_prefix() const {
    std::string s;
    for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }
  bool beamline() const { return kind == VlanKind::Beamline; }
};

inline std::string two(int n) { return (n < 10 ? "0" : "") + std::to_string(n); }

inline Segment beamline(int n) { return {100 + n, "BL" + two(n), VlanKind::Beamline}; }

// Segment groups behind each distribution point (L3 switch or firewall):
// 17, 17, 17 beamlines, then the last 11 with both staff segments.
inline std::vector<std::vector<Segment>> groups() {
  std::vector<std::vector<Segment>> g(kL3Switches);
  for (int n = 1; n <= kBeamlines; ++n) g[std::min((n - 1) / kMaxBeamlinesPerFirewall, kL3Switches - 1)].push_back(beamline(n));
  g.back().push_back({kStaffVid, "STAFF1", VlanKind::Staff});
  g.back().push_back({kStaffVid + 1, "STAFF2", VlanKind::Staff});
  return g;
}

// Spreads a group over its 8 L2 switches, the first ones taking one extra.
inline std::vector<std::vector<Segment>> per_switch(const std::vector<Segment>& group) {
  const int per_group = kL2Switches / kL3Switches;
  std::vector<std::vector<Segment>> out(per_group);
  const int base = static_cast<int>(group.size()) / per_group;
  const int extra = static_cast<int>(group.size()) % per_group;
  std::size_t k = 0;
  for (int s = 0; s < per_group; ++s)
    for (int i = 0; i < base + (s < extra ? 1 : 0); ++i) out[s].push_back(group[k++]);
  return out;
}

inline std::string switch_name(int n) { return "sw" + two(n); }

class Builder {
 public:
  explicit Builder(ScenarioConfig& c) : c_(c) {}

  void vlan(int vid, std::string name, VlanKind kind) { c_.vlans.push_back({VlanId(vid), std::move(name), kind}); }
  void sw(std::string id, bool l3 = false) { c_.switches.push_back({std::move(id), l3, Switch::kDefaultAging}); }
  void access(const std::string& node, int port, int vid) {
    c_.ports.push_back({node, port, AccessMode{VlanId(vid)}, std::nullopt});
  }
  void trunk(const std::string& node, int port, const std::set<int>& vids, std::optional<int> lag = std::nullopt) {
    TrunkMode t;
    for (int v : vids) t.allowed.insert(VlanId(v));
    c_.ports.push_back({node, port, t, lag});
  }
  void svi(const std::string& node, int vid, const std::string& cidr, Zone zone) {
    InterfaceDecl i;
    i.node = node;
    i.vid = VlanId(vid);
    i.addrs = {InterfaceAddress::parse(cidr)};
    i.zone = zone;
    c_.interfaces.push_back(i);
  }
  InterfaceDecl& iface(const std::string& node, int port, const std::vector<std::string>& cidrs, Zone zone) {
    InterfaceDecl i;
    i.node = node;
    i.port = port;
    for (const auto& s : cidrs) i.addrs.push_back(InterfaceAddress::parse(s));
    i.zone = zone;
    c_.interfaces.push_back(i);
    return c_.interfaces.back();
  }
  void host(std::string id, const std::string& cidr, std::optional<std::string> gw, std::string beamline = "") {
    HostDecl h;
    h.id = std::move(id);
    h.addr = InterfaceAddress::parse(cidr);
    if (gw) h.gateway = Ipv4Address::parse(*gw);
    h.beamline = std::move(beamline);
    c_.hosts.push_back(h);
  }
  void link(const std::string& a, int pa, const std::string& b, int pb, std::uint64_t bw) {
    c_.links.push_back({"l" + std::to_string(++links_), {a, pa}, {b, pb}, bw, Link::kDefaultPropagation});
  }
  void route_via(const std::string& node, const std::string& prefix, const std::string& gw) {
    c_.routes.push_back({node, Ipv4Network::parse(prefix), Ipv4Address::parse(gw)});
  }
  void route_dev(const std::string& node, const std::string& prefix, int vid) {
    c_.routes.push_back({node, Ipv4Network::parse(prefix), VlanId(vid)});
  }
  void route_balanced(const std::string& node, const std::string& prefix) {
    c_.routes.push_back({node, Ipv4Network::parse(prefix), Balanced{}});
  }
  void acl(const std::string& node, Zone from, Zone to, AclVerdict v = AclVerdict::DenyNew) {
    c_.acls.push_back({node, from, to, v});
  }
  void masquerade(const std::string& node, const std::string& scope, const std::string& ext) {
    c_.masquerades.push_back({node, Ipv4Network::parse(scope), Ipv4Address::parse(ext)});
  }
  void ping(std::string id, std::string src, std::string dst, std::uint32_t count, Time start = 0) {
    TrafficDecl t;
    t.id = std::move(id);
    t.kind = TrafficKind::Ping;
    t.src = std::move(src);
    t.dst = std::move(dst);
    t.count = count;
    t.start = start;
    c_.traffic.push_back(t);
  }
  void cbr(std::string id, std::string src, std::string dst, std::uint64_t rate, Time start, Time stop) {
    TrafficDecl t;
    t.id = std::move(id);
    t.kind = TrafficKind::Cbr;
    t.src = std::move(src);
    t.dst = std::move(dst);
    t.rate_bps = rate;
    t.start = start;
    t.stop = stop;
    c_.traffic.push_back(t);
  }
  void bulk(std::string id, std::string src, std::string dst, std::uint64_t total, Time start) {
    TrafficDecl t;
    t.id = std::move(id);
    t.kind = TrafficKind::Bulk;
    t.src = std::move(src);
    t.dst = std::move(dst);
    t.total_bytes = total;
    t.start = start;
    c_.traffic.push_back(t);
  }

  // Hosts of one segment on consecutive access ports of `node`, starting at
  // `port`. Returns the next free port.
  int hosts(const Segment& s, int count, const std::string& node, int port, std::uint64_t bw, bool gateway = true) {
    for (int i = 1; i <= count; ++i) {
      const std::string id = s.host_prefix() + "-h" + std::to_string(i);
      host(id, s.host_ip(i).to_string() + "/24", gateway ? std::optional(s.gateway().to_string()) : std::nullopt,
           s.beamline() ? s.name : "");
      access(node, port, s.vid);
      link(id, 0, node, port, bw);
      ++port;
    }
    return port;
  }

 private:
  ScenarioConfig& c_;
  int links_ = 0;
};

inline int hosts_for(const Segment& s, const Spring8Options& o) {
  if (s.kind == VlanKind::Beamline) return o.hosts_per_beamline;
  return o.staff_hosts;
}

inline std::set<int> vids_of(const std::vector<Segment>& segs) {
  std::set<int> out;
  for (const auto& s : segs) out.insert(s.vid);
  return out;
}

inline void user_vlans(Builder& b) {
  b.vlan(kMgmtVid, "MGMT", VlanKind::Management);
  for (int n = 1; n <= kBeamlines; ++n) b.vlan(100 + n, "BL" + two(n), VlanKind::Beamline);
  b.vlan(kStaffVid, "STAFF1", VlanKind::Staff);
  b.vlan(kStaffVid + 1, "STAFF2", VlanKind::Staff);
}

// The 32 beamline L2 switches: port 1 is the uplink trunk, hosts from port 2.
// `attach(group, index, vids)` cables each switch's uplink.
template <class Attach>
void access_layer(Builder& b, const Spring8Options& o, bool tagged, std::uint64_t host_bw, Attach attach) {
  auto gs = groups();
  int n = 0;
  for (int g = 0; g < kL3Switches; ++g) {
    auto split = per_switch(gs[g]);
    for (int s = 0; s < static_cast<int>(split.size()); ++s) {
      const std::string id = switch_name(++n);
      b.sw(id);
      if (tagged) b.trunk(id, 1, vids_of(split[s]));
      else b.access(id, 1, 1);
      int port = 2;
      for (const auto& seg : split[s]) {
        if (tagged) {
          port = b.hosts(seg, hosts_for(seg, o), id, port, host_bw);
        } else {
          // Flat fabric: every port in VLAN 1; hosts keep their segment addressing.
          for (int i = 1; i <= hosts_for(seg, o); ++i) {
            const std::string hid = seg.host_prefix() + "-h" + std::to_string(i);
            b.host(hid, seg.host_ip(i).to_string() + "/24", seg.gateway().to_string(), seg.beamline() ? seg.name : "");
            b.access(id, port, 1);
            b.link(hid, 0, id, port, host_bw);
            ++port;
          }
        }
      }
      attach(g, s, id, split[s]);
    }
  }
}

inline std::string host_of(int beamline_no, int i = 1) { return "bl" + two(beamline_no) + "-h" + std::to_string(i); }

}  // namespace spring8

// Upgraded network: Gigabit backbone, four L3 switches, 32 VLAN-aware L2
// switches on 100 Mbps uplinks, one /24 per segment, four capped zone
// firewalls in front of the OA side.
inline ScenarioConfig build_spring8_upgraded(const Spring8Options& o = {}) {
  using namespace spring8;
  ScenarioConfig c;
  c.name = "spring8-upgraded";
  c.engine.seed = o.seed;
  c.engine.probe_target = "oa1";
  Builder b(c);

  user_vlans(b);
  for (int k = 1; k <= kFirewalls; ++k) b.vlan(200 + k, "TRANSIT" + std::to_string(k), VlanKind::Transit);
  b.vlan(250, "PUBLIC", VlanKind::Public);
  b.vlan(300, "OA", VlanKind::Public);

  b.sw("bb");
  // bb: 1-4 trunks to L3 switches, 5-8 firewall dmz, 9-12 firewall public,
  // 13 OA router, 14 management station.
  for (int k = 1; k <= kL3Switches; ++k) {
    std::set<int> vids{200 + k};
    if (k == 1) vids.insert(kMgmtVid);
    b.trunk("bb", k, vids);
    b.access("bb", 4 + k, 200 + k);
    b.access("bb", 8 + k, 250);
  }
  b.access("bb", 13, 250);
  b.access("bb", 14, kMgmtVid);

  std::vector<std::string> l3s;
  for (int k = 1; k <= kL3Switches; ++k) {
    const std::string id = "l3-" + std::to_string(k);
    l3s.push_back(id);
    b.sw(id, true);
    std::set<int> vids{200 + k};
    if (k == 1) vids.insert(kMgmtVid);
    b.trunk(id, 1, vids);
    b.link(id, 1, "bb", k, kGigabit);
    b.svi(id, 200 + k, "10.200." + std::to_string(k) + ".1/29", Zone::Dmz);
    b.route_via(id, "0.0.0.0/0", "10.200." + std::to_string(k) + ".2");
  }
  b.svi("l3-1", kMgmtVid, "10.1.0.1/24", Zone::Dmz);

  std::vector<int> next_port(kL3Switches, 2);
  access_layer(b, o, true, kFast, [&](int g, int, const std::string& id, const std::vector<Segment>& segs) {
    const std::string& l3 = l3s[g];
    const int port = next_port[g]++;
    b.trunk(l3, port, vids_of(segs));
    b.link(id, 1, l3, port, kFast);
    for (const auto& s : segs) b.svi(l3, s.vid, s.gateway_if().to_string(), Zone::Dmz);
  });

  b.host("nms", "10.1.0.10/24", "10.1.0.1");
  b.link("nms", 0, "bb", 14, kGigabit);

  for (int k = 1; k <= kFirewalls; ++k) {
    const std::string fw = "fw" + std::to_string(k);
    FirewallDecl f{fw, {}};
    f.config.throughput_cap_bps = kFirewallCap;
    f.config.inside_prefixes = {Ipv4Network::parse("10.0.0.0/8")};
    c.firewalls.push_back(f);
    const std::string pub = "172.30.0." + std::to_string(10 + k);
    b.iface(fw, 1, {"10.200." + std::to_string(k) + ".2/29"}, Zone::Dmz);
    b.iface(fw, 2, {pub + "/24"}, Zone::Public);
    b.link(fw, 1, "bb", 4 + k, kGigabit);
    b.link(fw, 2, "bb", 8 + k, kGigabit);
    b.route_via(fw, "10.0.0.0/8", "10.200." + std::to_string(k) + ".1");
    b.route_via(fw, "192.168.0.0/16", "172.30.0.1");
    // Shared policy, stamped on every firewall.
    b.acl(fw, Zone::Public, Zone::Dmz);
    b.acl(fw, Zone::Public, Zone::Clean);
    b.acl(fw, Zone::Dmz, Zone::Clean);
    b.masquerade(fw, "0.0.0.0/0", pub);
  }

  b.sw("oa", true);
  b.access("oa", 1, 250);
  b.link("oa", 1, "bb", 13, kGigabit);
  b.svi("oa", 250, "172.30.0.1/24", Zone::Public);
  b.svi("oa", 300, "192.168.10.1/24", Zone::Public);
  b.route_via("oa", "10.0.0.0/8", "172.30.0.11");
  for (int i = 1; i <= 4; ++i) {
    const std::string id = "oa" + std::to_string(i);
    b.access("oa", 1 + i, 300);
    b.host(id, "192.168.10." + std::to_string(100 + i) + "/24", "192.168.10.1");
    b.link(id, 0, "oa", 1 + i, kGigabit);
  }

  if (o.traffic) {
    b.ping("ping-local", host_of(1, 1), host_of(1, 2), 5);
    b.ping("ping-oa-1", host_of(1, 1), "oa1", 5, kSecond);
    b.ping("ping-oa-2", host_of(20, 1), "oa2", 5, kSecond);
    b.ping("ping-oa-3", host_of(40, 1), "oa3", 5, kSecond);
    b.ping("ping-oa-4", host_of(60, 1), "oa4", 5, kSecond);
    b.cbr("image-stream", host_of(5, 1), "oa1", 34'130'000, 2 * kSecond, 4 * kSecond);
    b.ping("oa-probe-in", "oa2", host_of(10, 1), 3, 3 * kSecond);
  }
  normalize_scenario(c);
  return c;
}

// Legacy network: 100 Mbps backbone, 10 Mbps uplinks, one flat broadcast
// domain. Segments are IP-only; firewalls are multi-address gateways.
inline ScenarioConfig build_spring8_legacy(const Spring8Options& o = {}) {
  using namespace spring8;
  ScenarioConfig c;
  c.name = "spring8-legacy";
  c.engine.seed = o.seed;
  c.engine.probe_target = "oa1";
  Builder b(c);
  b.vlan(1, "FLAT", VlanKind::Other);

  auto gs = groups();
  b.sw("bb");
  b.sw("oahub");
  for (int k = 1; k <= kFirewalls; ++k) {
    const std::string fw = "fw" + std::to_string(k);
    FirewallDecl f{fw, {}};
    f.config.throughput_cap_bps = kFirewallCap;
    f.config.inside_prefixes = {Ipv4Network::parse("10.0.0.0/8")};
    c.firewalls.push_back(f);
    std::vector<std::string> gws;
    if (k == 1) gws.push_back("10.1.0.1/24");
    for (const auto& s : gs[k - 1]) gws.push_back(s.gateway_if().to_string());
    const std::string pub = "172.30.0." + std::to_string(10 + k);
    b.iface(fw, 1, gws, Zone::Dmz);
    b.iface(fw, 2, {pub + "/24"}, Zone::Public);
    b.access("bb", 32 + k, 1);
    b.access("oahub", k, 1);
    b.link(fw, 1, "bb", 32 + k, kFast);
    b.link(fw, 2, "oahub", k, kFast);
    b.acl(fw, Zone::Public, Zone::Dmz);
    b.acl(fw, Zone::Public, Zone::Clean);
    b.acl(fw, Zone::Dmz, Zone::Clean);
    b.masquerade(fw, "0.0.0.0/0", pub);
  }

  access_layer(b, o, false, kTen, [&](int g, int s, const std::string& id, const std::vector<Segment>&) {
    const int port = g * (kL2Switches / kL3Switches) + s + 1;
    b.access("bb", port, 1);
    b.link(id, 1, "bb", port, kTen);
  });

  b.access("bb", 37, 1);
  b.host("nms", "10.1.0.10/24", "10.1.0.1");
  b.link("nms", 0, "bb", 37, kFast);

  for (int i = 1; i <= 4; ++i) {
    const std::string id = "oa" + std::to_string(i);
    b.access("oahub", 4 + i, 1);
    b.host(id, "172.30.0." + std::to_string(100 + i) + "/24", std::nullopt);
    b.link(id, 0, "oahub", 4 + i, kFast);
  }

  if (o.traffic) {
    b.ping("ping-local", host_of(1, 1), host_of(1, 2), 5);
    b.ping("ping-oa-1", host_of(1, 1), "oa1", 5, kSecond);
    b.ping("ping-oa-2", host_of(20, 1), "oa2", 5, kSecond);
    b.ping("ping-oa-3", host_of(40, 1), "oa3", 5, kSecond);
    b.ping("ping-oa-4", host_of(60, 1), "oa4", 5, kSecond);
    b.cbr("image-stream", host_of(5, 1), "oa1", 34'130'000, 2 * kSecond, 4 * kSecond);
    b.ping("oa-probe-in", "oa2", host_of(10, 1), 3, 3 * kSecond);
  }
  normalize_scenario(c);
  return c;
}

// Redundant plan: one core L3 switch carries every user segment, the
// control-side clean VLAN and the transit toward an inner balancer; two active
// firewalls sit between the inner and outer balancers; the OA router hangs
// off the outer balancer. The core joins the backbone through a 2x1G LAG.
inline ScenarioConfig build_spring8_redundant(const Spring8Options& o = {}) {
  using namespace spring8;
  ScenarioConfig c;
  c.name = "spring8-redundant";
  c.engine.seed = o.seed;
  c.engine.probe_target = "oa-a1";
  c.engine.duration = 30 * kSecond;
  Builder b(c);

  user_vlans(b);
  constexpr int kClean = 400, kInner = 210, kOuter = 260, kOaA = 310, kOaB = 320;
  b.vlan(kClean, "BL-LAN", VlanKind::Clean);
  b.vlan(kInner, "TRANSIT-IN", VlanKind::Transit);
  b.vlan(kOuter, "TRANSIT-OUT", VlanKind::Transit);
  b.vlan(kOaA, "OA-A", VlanKind::Public);
  b.vlan(kOaB, "OA-B", VlanKind::Public);

  auto gs = groups();
  std::set<int> all_user{kMgmtVid};
  for (const auto& g : gs)
    for (const auto& s : g) all_user.insert(s.vid);

  // bb: 1-2 LAG to core, 3-6 trunks to distribution switches, 7 management.
  b.sw("bb");
  b.sw("core", true);
  for (int m = 1; m <= 2; ++m) {
    b.trunk("bb", m, all_user, 1);
    b.trunk("core", m, all_user, 1);
    b.link("core", m, "bb", m, kGigabit);
  }
  b.access("bb", 7, kMgmtVid);
  for (int v : all_user) {
    Segment s{v, "", VlanKind::Other};
    b.svi("core", v, s.gateway_if().to_string(), Zone::Dmz);
  }
  b.svi("core", kClean, "10.4.0.1/24", Zone::Clean);
  b.svi("core", kInner, "10.210.0.1/29", Zone::Public);
  b.route_via("core", "0.0.0.0/0", "10.210.0.2");
  b.acl("core", Zone::Public, Zone::Dmz);
  b.acl("core", Zone::Public, Zone::Clean);
  b.acl("core", Zone::Dmz, Zone::Clean);

  std::vector<std::string> dist;
  for (int k = 1; k <= kL3Switches; ++k) {
    const std::string id = "dist" + std::to_string(k);
    dist.push_back(id);
    b.sw(id);
    std::set<int> vids = vids_of(gs[k - 1]);
    b.trunk(id, 1, vids);
    b.trunk("bb", 2 + k, vids);
    b.link(id, 1, "bb", 2 + k, kGigabit);
  }
  std::vector<int> next_port(kL3Switches, 2);
  access_layer(b, o, true, kFast, [&](int g, int, const std::string& id, const std::vector<Segment>& segs) {
    const int port = next_port[g]++;
    b.trunk(dist[g], port, vids_of(segs));
    b.link(id, 1, dist[g], port, kFast);
  });

  b.host("nms", "10.1.0.10/24", "10.1.0.1");
  b.link("nms", 0, "bb", 7, kGigabit);

  // Control-side LAN on the core.
  int core_port = 3;
  for (int i = 1; i <= 2; ++i) {
    const std::string id = "ctl" + std::to_string(i);
    b.access("core", core_port, kClean);
    b.host(id, "10.4.0." + std::to_string(9 + i) + "/24", "10.4.0.1");
    b.link(id, 0, "core", core_port, kGigabit);
    ++core_port;
  }

  // Inner balancer: port 1 toward the core, ports 2-3 one path per firewall.
  c.balancers.push_back({"lb-in", {}});
  b.access("core", core_port, kInner);
  b.iface("lb-in", 1, {"10.210.0.2/29"}, Zone::Dmz);
  b.link("lb-in", 1, "core", core_port, kGigabit);
  c.balancers.push_back({"lb-out", {}});
  b.iface("lb-out", 1, {"10.251.0.2/29"}, Zone::Public);

  for (int k = 1; k <= 2; ++k) {
    const std::string fw = "fw" + std::to_string(k), ks = std::to_string(k);
    FirewallDecl f{fw, {}};
    f.config.throughput_cap_bps = kFirewallCap;
    f.config.scope_capacity = 64;
    f.config.inside_prefixes = {Ipv4Network::parse("10.0.0.0/8")};
    c.firewalls.push_back(f);
    b.iface(fw, 1, {"10.250." + ks + ".2/30"}, Zone::Dmz);
    b.iface(fw, 2, {"172.16." + ks + ".2/24", "172.17." + ks + ".2/24"}, Zone::Public);
    b.route_via(fw, "10.0.0.0/8", "10.250." + ks + ".1");
    b.route_via(fw, "192.168.0.0/16", "172.16." + ks + ".1");
    b.acl(fw, Zone::Public, Zone::Dmz);
    b.acl(fw, Zone::Public, Zone::Clean);
    b.acl(fw, Zone::Dmz, Zone::Clean);
    // The external address follows the routed destination.
    b.masquerade(fw, "192.168.10.0/24", "172.16." + ks + ".2");
    b.masquerade(fw, "192.168.20.0/24", "172.17." + ks + ".2");

    auto& in = b.iface("lb-in", 1 + k, {"10.250." + ks + ".1/30"}, Zone::Dmz);
    in.path = k;
    in.next_hop = Ipv4Address::parse("10.250." + ks + ".2");
    in.peer = Ipv4Address::parse("172.16." + ks + ".1");
    b.link("lb-in", 1 + k, fw, 1, kGigabit);

    auto& out = b.iface("lb-out", 1 + k, {"172.16." + ks + ".1/24", "172.17." + ks + ".1/24"}, Zone::Public);
    out.path = k;
    out.next_hop = Ipv4Address::parse("172.16." + ks + ".2");
    out.peer = Ipv4Address::parse("10.250." + ks + ".1");
    b.link("lb-out", 1 + k, fw, 2, kGigabit);
  }
  b.route_balanced("lb-in", "0.0.0.0/0");
  b.route_via("lb-in", "10.0.0.0/8", "10.210.0.1");
  b.route_balanced("lb-out", "10.0.0.0/8");
  b.route_via("lb-out", "0.0.0.0/0", "10.251.0.1");

  b.sw("oa", true);
  b.access("oa", 1, kOuter);
  b.link("oa", 1, "lb-out", 1, kGigabit);
  b.svi("oa", kOuter, "10.251.0.1/29", Zone::Public);
  b.svi("oa", kOaA, "192.168.10.1/24", Zone::Public);
  b.svi("oa", kOaB, "192.168.20.1/24", Zone::Public);
  b.route_via("oa", "10.0.0.0/8", "10.251.0.2");
  b.route_via("oa", "172.16.0.0/16", "10.251.0.2");
  b.route_via("oa", "172.17.0.0/16", "10.251.0.2");
  int oa_port = 2;
  for (const auto& [vid, net, tag] : {std::tuple{kOaA, "192.168.10.", "a"}, std::tuple{kOaB, "192.168.20.", "b"}}) {
    for (int i = 1; i <= 2; ++i) {
      const std::string id = std::string("oa-") + tag + std::to_string(i);
      b.access("oa", oa_port, vid);
      b.host(id, net + std::to_string(100 + i) + "/24", std::string(net) + "1");
      b.link(id, 0, "oa", oa_port, kGigabit);
      ++oa_port;
    }
  }

  if (o.traffic) {
    b.ping("ping-local", host_of(1, 1), host_of(1, 2), 5);
    b.ping("ping-oa-a", host_of(1, 1), "oa-a1", 20, kSecond);
    b.ping("ping-oa-b", host_of(30, 1), "oa-b1", 20, kSecond);
    b.cbr("image-stream", host_of(5, 1), "oa-a2", 34'130'000, 2 * kSecond, 4 * kSecond);
    b.ping("oa-probe-in", "oa-b2", host_of(10, 1), 3, 3 * kSecond);
    b.ping("user-to-control", host_of(12, 1), "ctl1", 3, 4 * kSecond);
  }
  normalize_scenario(c);
  return c;
}

struct BundledScenario {
  const char* name;
  ScenarioConfig (*build)(const Spring8Options&);
  const char* summary;
};

inline const std::vector<BundledScenario>& bundled_scenarios() {
  static const std::vector<BundledScenario> all = {
      {"spring8-legacy", build_spring8_legacy, "flat 100M backbone, 10M uplinks, no VLANs"},
      {"spring8-upgraded", build_spring8_upgraded, "GbE backbone, 4 L3 + 32 L2 switches, 65 VLAN segments"},
      {"spring8-redundant", build_spring8_redundant, "core L3 switch, two active firewalls between balancers"},
  };
  return all;
}

inline std::optional<ScenarioConfig> bundled_scenario(std::string_view name, const Spring8Options& o = {}) {
  for (const auto& s : bundled_scenarios())
    if (name == s.name) return s.build(o);
  return std::nullopt;
}

}  // namespace netfab
