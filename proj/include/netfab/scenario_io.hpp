#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "netfab/scenario.hpp"

namespace netfab {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// One declaration line: key=value tokens, each key at most once.
class Decl {
 public:
  Decl(int line, std::map<std::string, std::string, std::less<>> kv) : line_(line), kv_(std::move(kv)) {}

  int line() const { return line_; }
  bool has(std::string_view k) const { return kv_.count(k) > 0; }

  const std::string& req(std::string_view k) {
    auto it = kv_.find(k);
    if (it == kv_.end()) fail("missing '" + std::string(k) + "'");
    used_.insert(it->first);
    return it->second;
  }
  std::optional<std::string> opt(std::string_view k) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(it->first);
    return it->second;
  }

  [[noreturn]] void fail(const std::string& reason) const { throw ParseError(line_, reason); }

  void bad(std::string_view key, const std::string& v, std::string_view what) const {
    fail("bad " + std::string(key) + " '" + v + "': expected " + std::string(what));
  }

  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) fail("unknown key '" + k + "'");
  }

  long long integer(std::string_view key, const std::string& v, long long lo, long long hi) const {
    long long x = 0;
    if (!parse_int(v, x) || x < lo || x > hi)
      bad(key, v, "integer in [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    return x;
  }
  std::uint64_t si(std::string_view key, const std::string& v) const {
    std::uint64_t x = 0;
    if (!parse_si(v, x)) bad(key, v, "non-negative number with optional k/M/G/T suffix");
    return x;
  }
  Time seconds(std::string_view key, const std::string& v) const {
    Time t = 0;
    if (!parse_seconds(v, t) || t < 0) bad(key, v, "non-negative seconds");
    return t;
  }
  VlanId vid(std::string_view key, const std::string& v) const {
    long long x = 0;
    if (!parse_int(v, x) || !VlanId::valid(x)) bad(key, v, "vid in [1,4094]");
    return VlanId(x);
  }
  Ipv4Address ip(std::string_view key, const std::string& v) const {
    auto a = Ipv4Address::try_parse(v);
    if (!a) bad(key, v, "dotted-quad IPv4 address");
    return *a;
  }
  Ipv4Network net(std::string_view key, const std::string& v) const {
    try {
      return Ipv4Network::parse(v);
    } catch (const Error&) {
      bad(key, v, "IPv4 prefix a.b.c.d/len");
    }
    return {};
  }
  InterfaceAddress ifaddr(std::string_view key, std::string_view v) const {
    try {
      return InterfaceAddress::parse(v);
    } catch (const Error&) {
      bad(key, std::string(v), "interface address a.b.c.d/len");
    }
    return {};
  }
  Zone zone(std::string_view key, const std::string& v) const {
    auto z = parse_zone(v);
    if (!z) bad(key, v, "clean|dmz|public");
    return *z;
  }
  PortRef port_ref(std::string_view key, const std::string& v) const {
    auto colon = v.rfind(':');
    if (colon == std::string::npos || colon == 0) bad(key, v, "node:port");
    return {v.substr(0, colon), static_cast<int>(integer(key, v.substr(colon + 1), 0, 1 << 20))};
  }
  std::string ident(std::string_view key, const std::string& v) const {
    if (v.empty() || v.find_first_of(":,=") != std::string::npos) bad(key, v, "identifier without ':', ',' or '='");
    return v;
  }

 private:
  int line_;
  std::map<std::string, std::string, std::less<>> kv_;
  std::set<std::string, std::less<>> used_;
};

inline int iface_section_rank(const ScenarioConfig& c, const std::string& node) {
  for (const auto& f : c.firewalls)
    if (f.id == node) return 1;
  for (const auto& b : c.balancers)
    if (b.id == node) return 2;
  return 0;
}

inline bool is_l3_node(const ScenarioConfig& c, const std::string& node) {
  for (const auto& s : c.switches)
    if (s.id == node) return s.layer3;
  return false;
}

inline std::string join_addrs(const std::vector<InterfaceAddress>& addrs) {
  std::string s;
  for (std::size_t i = 0; i < addrs.size(); ++i) s += (i ? "," : "") + addrs[i].to_string();
  return s;
}

}  // namespace detail

// Canonical grouping: the same grouping serialize_scenario writes, so a
// normalized config survives a serialize/parse round trip unchanged.
inline void normalize_scenario(ScenarioConfig& c) {
  std::stable_partition(c.switches.begin(), c.switches.end(), [](const SwitchDecl& s) { return !s.layer3; });
  std::stable_partition(c.ports.begin(), c.ports.end(),
                        [&](const PortDecl& p) { return !detail::is_l3_node(c, p.node); });
  std::stable_sort(c.interfaces.begin(), c.interfaces.end(), [&](const InterfaceDecl& a, const InterfaceDecl& b) {
    return detail::iface_section_rank(c, a.node) < detail::iface_section_rank(c, b.node);
  });
}

inline ScenarioConfig parse_scenario(std::string_view text) {
  static const std::set<std::string, std::less<>> kSections{
      "switch", "l3",   "firewall",   "balancer", "host",  "link", "vlan",
      "route",  "acl",  "masquerade", "traffic",  "fault", "engine"};
  ScenarioConfig c;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = detail::trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      std::string_view name = line.substr(1, line.size() - 2);
      if (!kSections.count(name)) throw ParseError(lineno, "unknown section '" + std::string(name) + "'");
      section = name;
      continue;
    }
    if (section.empty()) throw ParseError(lineno, "declaration before any section");

    std::map<std::string, std::string, std::less<>> kv;
    for (auto tok : detail::split_ws(line)) {
      auto eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ParseError(lineno, "expected key=value, got '" + std::string(tok) + "'");
      if (!kv.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1))).second)
        throw ParseError(lineno, "duplicate key '" + std::string(tok.substr(0, eq)) + "'");
    }
    detail::Decl d(lineno, std::move(kv));

    if (section == "engine") {
      if (auto v = d.opt("name")) c.name = d.ident("name", *v);
      if (auto v = d.opt("seed"); v && !detail::parse_u64(*v, c.engine.seed)) d.bad("seed", *v, "unsigned integer");
      if (auto v = d.opt("duration")) c.engine.duration = d.seconds("duration", *v);
      if (auto v = d.opt("probe_target")) c.engine.probe_target = d.ident("probe_target", *v);
      if (auto v = d.opt("shape_interval")) c.engine.shape_interval = d.seconds("shape_interval", *v);
      if (auto v = d.opt("age_interval")) c.engine.age_interval = d.seconds("age_interval", *v);
      if (c.engine.shape_interval <= 0 || c.engine.age_interval <= 0)
        d.fail("engine intervals must be positive");
    } else if (section == "vlan") {
      VlanDecl v{d.vid("vid", d.req("vid")), "", VlanKind::Other};
      if (auto n = d.opt("name")) v.name = d.ident("name", *n);
      if (auto k = d.opt("kind")) {
        auto kind = parse_vlan_kind(*k);
        if (!kind) d.bad("kind", *k, "beamline|mgmt|staff|clean|transit|public|other");
        v.kind = *kind;
      }
      c.vlans.push_back(std::move(v));
    } else if ((section == "switch" || section == "l3") && d.has("id")) {
      SwitchDecl s{d.ident("id", d.req("id")), section == "l3", Switch::kDefaultAging};
      if (auto a = d.opt("aging")) s.fdb_aging = d.seconds("aging", *a);
      c.switches.push_back(std::move(s));
    } else if ((section == "switch" || section == "l3") && d.has("port")) {
      auto ref = d.port_ref("port", d.req("port"));
      PortDecl p{ref.node, ref.port, AccessMode{VlanId(1)}, std::nullopt};
      auto access = d.opt("access");
      auto trunk = d.opt("trunk");
      if (access.has_value() == trunk.has_value()) d.fail("port needs exactly one of access= or trunk=");
      if (access) {
        p.mode = AccessMode{d.vid("access", *access)};
      } else {
        TrunkMode t;
        for (auto part : detail::split(*trunk, ',')) t.allowed.insert(d.vid("trunk", std::string(part)));
        p.mode = std::move(t);
      }
      if (auto g = d.opt("lag")) p.lag = static_cast<int>(d.integer("lag", *g, 0, 1 << 20));
      c.ports.push_back(std::move(p));
    } else if ((section == "l3" || section == "firewall" || section == "balancer") && d.has("iface")) {
      InterfaceDecl i;
      const std::string& ref = d.req("iface");
      if (section == "l3") {
        i.node = d.ident("iface", ref);
        i.vid = d.vid("vid", d.req("vid"));
      } else {
        auto pr = d.port_ref("iface", ref);
        i.node = pr.node;
        i.port = pr.port;
      }
      for (auto part : detail::split(d.req("ip"), ',')) i.addrs.push_back(d.ifaddr("ip", part));
      if (auto z = d.opt("zone")) i.zone = d.zone("zone", *z);
      if (section == "balancer") {
        if (auto p = d.opt("path")) i.path = static_cast<int>(d.integer("path", *p, 1, 2));
        if (auto n = d.opt("nexthop")) i.next_hop = d.ip("nexthop", *n);
        if (auto n = d.opt("peer")) i.peer = d.ip("peer", *n);
      }
      c.interfaces.push_back(std::move(i));
    } else if (section == "firewall" && d.has("id")) {
      FirewallDecl f{d.ident("id", d.req("id")), {}};
      if (auto v = d.opt("cap")) f.config.throughput_cap_bps = d.si("cap", *v);
      if (auto v = d.opt("queue")) f.config.queue_limit = d.integer("queue", *v, 1, 1 << 24);
      if (auto v = d.opt("nat")) f.config.nat_capacity = d.integer("nat", *v, 1, 1 << 24);
      if (auto v = d.opt("scopes")) f.config.scope_capacity = d.integer("scopes", *v, 1, 1 << 24);
      if (auto v = d.opt("timeout")) f.config.idle_timeout = d.seconds("timeout", *v);
      if (auto v = d.opt("inside"))
        for (auto part : detail::split(*v, ',')) f.config.inside_prefixes.push_back(d.net("inside", std::string(part)));
      if (f.config.throughput_cap_bps == 0) d.fail("firewall cap must be positive");
      c.firewalls.push_back(std::move(f));
    } else if (section == "balancer" && d.has("id")) {
      BalancerDecl b{d.ident("id", d.req("id")), {}};
      if (auto v = d.opt("interval")) b.config.probe_interval = d.seconds("interval", *v);
      if (auto v = d.opt("down")) b.config.down_threshold = static_cast<int>(d.integer("down", *v, 1, 1000));
      if (auto v = d.opt("up")) b.config.up_threshold = static_cast<int>(d.integer("up", *v, 1, 1000));
      if (b.config.probe_interval <= 0) d.fail("probe interval must be positive");
      c.balancers.push_back(std::move(b));
    } else if (section == "host") {
      HostDecl h;
      h.id = d.ident("id", d.req("id"));
      h.addr = d.ifaddr("ip", d.req("ip"));
      if (auto v = d.opt("gw")) h.gateway = d.ip("gw", *v);
      if (auto v = d.opt("beamline")) h.beamline = d.ident("beamline", *v);
      if (auto v = d.opt("mac")) {
        auto m = MacAddress::try_parse(*v);
        if (!m) d.bad("mac", *v, "xx:xx:xx:xx:xx:xx");
        h.mac = *m;
      }
      c.hosts.push_back(std::move(h));
    } else if (section == "link") {
      LinkDecl l;
      l.id = d.ident("id", d.req("id"));
      l.a = d.port_ref("a", d.req("a"));
      l.b = d.port_ref("b", d.req("b"));
      if (auto v = d.opt("bw")) l.bandwidth = d.si("bw", *v);
      if (auto v = d.opt("prop_us")) l.propagation = d.integer("prop_us", *v, 0, 1LL << 40);
      if (l.bandwidth == 0) d.fail("link bandwidth must be positive");
      c.links.push_back(std::move(l));
    } else if (section == "route") {
      RouteDecl r;
      r.node = d.ident("node", d.req("node"));
      r.prefix = d.net("prefix", d.req("prefix"));
      auto via = d.opt("via");
      auto dev = d.opt("dev");
      if (via.has_value() == dev.has_value()) d.fail("route needs exactly one of via= or dev=");
      if (dev) r.via = d.vid("dev", *dev);
      else if (*via == "balanced") r.via = Balanced{};
      else r.via = d.ip("via", *via);
      c.routes.push_back(std::move(r));
    } else if (section == "acl") {
      AclDecl a;
      a.node = d.ident("node", d.req("node"));
      a.from = d.zone("from", d.req("from"));
      a.to = d.zone("to", d.req("to"));
      const auto& v = d.req("verdict");
      if (v == "permit") a.verdict = AclVerdict::Permit;
      else if (v == "deny-new") a.verdict = AclVerdict::DenyNew;
      else d.bad("verdict", v, "permit|deny-new");
      c.acls.push_back(std::move(a));
    } else if (section == "masquerade") {
      c.masquerades.push_back({d.ident("node", d.req("node")), d.net("scope", d.req("scope")),
                               d.ip("ext", d.req("ext"))});
    } else if (section == "traffic") {
      TrafficDecl t;
      t.id = d.ident("id", d.req("id"));
      const auto& kind = d.req("kind");
      if (kind == "cbr") t.kind = TrafficKind::Cbr;
      else if (kind == "bulk") t.kind = TrafficKind::Bulk;
      else if (kind == "ping") t.kind = TrafficKind::Ping;
      else d.bad("kind", kind, "cbr|bulk|ping");
      t.src = d.ident("src", d.req("src"));
      t.dst = d.ident("dst", d.req("dst"));
      if (auto v = d.opt("rate")) t.rate_bps = d.si("rate", *v);
      if (auto v = d.opt("size")) t.packet_bytes = static_cast<std::uint32_t>(d.integer("size", *v, 28, 1500));
      if (auto v = d.opt("total")) t.total_bytes = d.si("total", *v);
      if (auto v = d.opt("count")) t.count = static_cast<std::uint32_t>(d.integer("count", *v, 1, 1 << 30));
      if (auto v = d.opt("interval")) t.interval = d.seconds("interval", *v);
      if (auto v = d.opt("start")) t.start = d.seconds("start", *v);
      if (auto v = d.opt("stop")) t.stop = d.seconds("stop", *v);
      if (t.kind == TrafficKind::Cbr && t.rate_bps == 0) d.fail("cbr traffic needs rate > 0");
      if (t.kind == TrafficKind::Bulk && t.total_bytes == 0) d.fail("bulk traffic needs total > 0");
      if (t.kind == TrafficKind::Ping && t.count == 0) d.fail("ping traffic needs count > 0");
      if (t.kind == TrafficKind::Ping && t.interval <= 0) d.fail("ping interval must be positive");
      c.traffic.push_back(std::move(t));
    } else if (section == "fault") {
      FaultDecl f;
      f.at = d.seconds("at", d.req("at"));
      const auto& a = d.req("action");
      auto action = parse_fault_action(a);
      if (!action) d.bad("action", a, "fail_node|fail_link|recover");
      f.action = *action;
      f.target = d.ident("target", d.req("target"));
      c.faults.push_back(std::move(f));
    } else {
      d.fail("unrecognised declaration in [" + section + "]");
    }
    d.finish();
  }

  normalize_scenario(c);
  return c;
}

inline std::string serialize_scenario(const ScenarioConfig& c) {
  using detail::format_seconds;
  using detail::format_si;
  std::ostringstream o;
  o << "[engine]\n";
  if (!c.name.empty()) o << "name=" << c.name << "\n";
  o << "seed=" << c.engine.seed << " duration=" << format_seconds(c.engine.duration)
    << " shape_interval=" << format_seconds(c.engine.shape_interval)
    << " age_interval=" << format_seconds(c.engine.age_interval);
  if (c.engine.probe_target) o << " probe_target=" << *c.engine.probe_target;
  o << "\n";

  if (!c.vlans.empty()) o << "\n[vlan]\n";
  for (const auto& v : c.vlans) {
    o << "vid=" << v.vid.value();
    if (!v.name.empty()) o << " name=" << v.name;
    o << " kind=" << to_string(v.kind) << "\n";
  }

  auto port_line = [&](const PortDecl& p) {
    o << "port=" << p.node << ":" << p.port;
    if (auto* a = std::get_if<AccessMode>(&p.mode)) {
      o << " access=" << a->vid.value();
    } else {
      o << " trunk=";
      bool first = true;
      for (auto v : std::get<TrunkMode>(p.mode).allowed) {
        o << (first ? "" : ",") << v.value();
        first = false;
      }
    }
    if (p.lag) o << " lag=" << *p.lag;
    o << "\n";
  };
  auto iface_line = [&](const InterfaceDecl& i) {
    o << "iface=" << i.node;
    if (i.port) o << ":" << *i.port;
    if (i.vid) o << " vid=" << i.vid->value();
    o << " ip=" << detail::join_addrs(i.addrs) << " zone=" << to_string(i.zone);
    if (i.path) o << " path=" << *i.path;
    if (i.next_hop) o << " nexthop=" << i.next_hop->to_string();
    if (i.peer) o << " peer=" << i.peer->to_string();
    o << "\n";
  };

  for (bool l3 : {false, true}) {
    bool any = false;
    for (const auto& s : c.switches) any |= s.layer3 == l3;
    for (const auto& p : c.ports) any |= detail::is_l3_node(c, p.node) == l3;
    if (l3)
      for (const auto& i : c.interfaces) any |= detail::iface_section_rank(c, i.node) == 0;
    if (!any) continue;
    o << "\n[" << (l3 ? "l3" : "switch") << "]\n";
    for (const auto& s : c.switches)
      if (s.layer3 == l3) o << "id=" << s.id << " aging=" << format_seconds(s.fdb_aging) << "\n";
    for (const auto& p : c.ports)
      if (detail::is_l3_node(c, p.node) == l3) port_line(p);
    if (l3)
      for (const auto& i : c.interfaces)
        if (detail::iface_section_rank(c, i.node) == 0) iface_line(i);
  }

  if (!c.firewalls.empty()) {
    o << "\n[firewall]\n";
    for (const auto& f : c.firewalls) {
      const auto& k = f.config;
      o << "id=" << f.id << " cap=" << format_si(k.throughput_cap_bps) << " queue=" << k.queue_limit
        << " nat=" << k.nat_capacity << " scopes=" << k.scope_capacity
        << " timeout=" << format_seconds(k.idle_timeout);
      if (!k.inside_prefixes.empty()) {
        o << " inside=";
        for (std::size_t i = 0; i < k.inside_prefixes.size(); ++i)
          o << (i ? "," : "") << k.inside_prefixes[i].to_string();
      }
      o << "\n";
    }
    for (const auto& i : c.interfaces)
      if (detail::iface_section_rank(c, i.node) == 1) iface_line(i);
  }
  if (!c.balancers.empty()) {
    o << "\n[balancer]\n";
    for (const auto& b : c.balancers)
      o << "id=" << b.id << " interval=" << format_seconds(b.config.probe_interval)
        << " down=" << b.config.down_threshold << " up=" << b.config.up_threshold << "\n";
    for (const auto& i : c.interfaces)
      if (detail::iface_section_rank(c, i.node) == 2) iface_line(i);
  }

  if (!c.hosts.empty()) o << "\n[host]\n";
  for (const auto& h : c.hosts) {
    o << "id=" << h.id << " ip=" << h.addr.to_string();
    if (h.gateway) o << " gw=" << h.gateway->to_string();
    if (!h.beamline.empty()) o << " beamline=" << h.beamline;
    if (h.mac) o << " mac=" << h.mac->to_string();
    o << "\n";
  }
  if (!c.links.empty()) o << "\n[link]\n";
  for (const auto& l : c.links)
    o << "id=" << l.id << " a=" << l.a.to_string() << " b=" << l.b.to_string() << " bw=" << format_si(l.bandwidth)
      << " prop_us=" << l.propagation << "\n";
  if (!c.routes.empty()) o << "\n[route]\n";
  for (const auto& r : c.routes) {
    o << "node=" << r.node << " prefix=" << r.prefix.to_string();
    if (auto* v = std::get_if<VlanId>(&r.via)) o << " dev=" << v->value();
    else if (auto* g = std::get_if<Ipv4Address>(&r.via)) o << " via=" << g->to_string();
    else o << " via=balanced";
    o << "\n";
  }
  if (!c.acls.empty()) o << "\n[acl]\n";
  for (const auto& a : c.acls)
    o << "node=" << a.node << " from=" << to_string(a.from) << " to=" << to_string(a.to)
      << " verdict=" << to_string(a.verdict) << "\n";
  if (!c.masquerades.empty()) o << "\n[masquerade]\n";
  for (const auto& m : c.masquerades)
    o << "node=" << m.node << " scope=" << m.scope.to_string() << " ext=" << m.external.to_string() << "\n";
  if (!c.traffic.empty()) o << "\n[traffic]\n";
  for (const auto& t : c.traffic) {
    o << "id=" << t.id << " kind=" << to_string(t.kind) << " src=" << t.src << " dst=" << t.dst;
    switch (t.kind) {
      case TrafficKind::Cbr: o << " rate=" << format_si(t.rate_bps) << " size=" << t.packet_bytes; break;
      case TrafficKind::Bulk: o << " total=" << format_si(t.total_bytes); break;
      case TrafficKind::Ping: o << " count=" << t.count << " interval=" << format_seconds(t.interval); break;
    }
    o << " start=" << format_seconds(t.start);
    if (t.stop) o << " stop=" << format_seconds(*t.stop);
    o << "\n";
  }
  if (!c.faults.empty()) o << "\n[fault]\n";
  for (const auto& f : c.faults)
    o << "at=" << format_seconds(f.at) << " action=" << to_string(f.action) << " target=" << f.target << "\n";
  return o.str();
}

// Per-VLAN bridge graphs. Nodes are switches (L2 and the bridge half of L3
// switches); an edge is a link whose two switch ports both carry the VLAN.
// Parallel links of one LAG group count as a single edge.
inline void check_vlan_loops(const ScenarioConfig& c) {
  std::map<std::string, int> bridge;
  for (const auto& s : c.switches) bridge.emplace(s.id, static_cast<int>(bridge.size()));
  std::map<std::pair<std::string, int>, const PortDecl*> ports;
  for (const auto& p : c.ports) ports[{p.node, p.port}] = &p;
  std::vector<std::string> names(bridge.size());
  for (const auto& [id, i] : bridge) names[i] = id;

  std::set<VlanId> vids;
  for (const auto& v : c.vlans) vids.insert(v.vid);
  for (const auto& p : c.ports) {
    if (auto* a = std::get_if<AccessMode>(&p.mode)) vids.insert(a->vid);
    else vids.insert(std::get<TrunkMode>(p.mode).allowed.begin(), std::get<TrunkMode>(p.mode).allowed.end());
  }

  for (VlanId vid : vids) {
    std::vector<int> parent(bridge.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    std::vector<std::vector<int>> adj(bridge.size());
    std::set<std::tuple<int, int, int, int>> lag_edges;

    for (const auto& l : c.links) {
      auto ia = bridge.find(l.a.node);
      auto ib = bridge.find(l.b.node);
      if (ia == bridge.end() || ib == bridge.end()) continue;
      auto pa = ports.find({l.a.node, l.a.port});
      auto pb = ports.find({l.b.node, l.b.port});
      if (pa == ports.end() || pb == ports.end()) continue;
      if (!is_member(pa->second->mode, vid) || !is_member(pb->second->mode, vid)) continue;
      int u = ia->second, v = ib->second;
      if (pa->second->lag && pb->second->lag) {
        auto key = std::make_tuple(std::min(u, v), std::max(u, v), u < v ? *pa->second->lag : *pb->second->lag,
                                   u < v ? *pb->second->lag : *pa->second->lag);
        if (!lag_edges.insert(key).second) continue;
      }
      if (find(u) == find(v)) {
        // Recover the existing tree path u ~> v, which closes the cycle.
        std::vector<int> prev(bridge.size(), -1);
        std::queue<int> q;
        q.push(u);
        prev[u] = u;
        while (!q.empty()) {
          int x = q.front();
          q.pop();
          for (int y : adj[x])
            if (prev[y] < 0) {
              prev[y] = x;
              q.push(y);
            }
        }
        std::vector<std::string> cycle;
        for (int x = v; x != u; x = prev[x]) cycle.push_back(names[x]);
        cycle.push_back(names[u]);
        std::reverse(cycle.begin(), cycle.end());
        cycle.push_back(names[u]);
        throw LoopError(vid, cycle);
      }
      parent[find(u)] = find(v);
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
  }
}

// Referential integrity and device-level configuration rules. Throws
// ValidationError or LoopError.
inline void validate_scenario(const ScenarioConfig& c) {
  enum class Kind { Switch, L3, Firewall, Balancer, Host };
  std::map<std::string, Kind> nodes;
  auto add_node = [&](const std::string& id, Kind k) {
    if (!nodes.emplace(id, k).second) throw ValidationError(id, "duplicate node id");
  };
  for (const auto& s : c.switches) add_node(s.id, s.layer3 ? Kind::L3 : Kind::Switch);
  for (const auto& f : c.firewalls) add_node(f.id, Kind::Firewall);
  for (const auto& b : c.balancers) add_node(b.id, Kind::Balancer);
  for (const auto& h : c.hosts) add_node(h.id, Kind::Host);
  auto kind_of = [&](const std::string& id, const std::string& ref) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw ValidationError(ref, "unknown node '" + id + "'");
    return it->second;
  };

  std::set<VlanId> vids;
  std::set<std::string> vlan_names;
  for (const auto& v : c.vlans) {
    if (!vids.insert(v.vid).second) throw ValidationError("vlan " + std::to_string(v.vid.value()), "duplicate vid");
    if (!v.name.empty() && !vlan_names.insert(v.name).second)
      throw ValidationError("vlan " + v.name, "duplicate vlan name");
  }
  auto need_vid = [&](VlanId v, const std::string& ref) {
    if (!vids.count(v)) throw ValidationError(ref, "undeclared vlan " + std::to_string(v.value()));
  };

  // Bridges: build each switch to apply port/LAG rules.
  std::map<std::string, Switch> bridges;
  for (const auto& s : c.switches) bridges.emplace(s.id, Switch(s.fdb_aging));
  for (const auto& p : c.ports) {
    const std::string ref = "port " + p.node + ":" + std::to_string(p.port);
    Kind k = kind_of(p.node, ref);
    if (k != Kind::Switch && k != Kind::L3) throw ValidationError(ref, "ports belong to switches");
    if (k == Kind::L3 && p.port == 0) throw ValidationError(ref, "port 0 of an L3 switch is its routing engine");
    if (auto* a = std::get_if<AccessMode>(&p.mode)) need_vid(a->vid, ref);
    else for (auto v : std::get<TrunkMode>(p.mode).allowed) need_vid(v, ref);
    try {
      bridges.at(p.node).add_port({p.port, p.mode, true, p.lag});
    } catch (const Error& e) {
      throw ValidationError(ref, e.what());
    }
  }

  std::map<std::string, L3Switch> routers;
  std::map<std::string, Firewall> firewalls;
  std::map<std::string, std::set<int>> iface_ports;
  std::map<std::string, std::set<int>> lb_paths;
  for (const auto& s : c.switches)
    if (s.layer3) routers.emplace(s.id, L3Switch());
  for (const auto& f : c.firewalls) firewalls.emplace(f.id, Firewall(f.config));

  for (const auto& i : c.interfaces) {
    std::string ref = "iface " + i.node;
    Kind k = kind_of(i.node, ref);
    if (i.addrs.empty()) throw ValidationError(ref, "interface without an address");
    try {
      if (k == Kind::L3) {
        if (!i.vid) throw ValidationError(ref, "L3 interface needs vid=");
        ref += " vid " + std::to_string(i.vid->value());
        need_vid(*i.vid, ref);
        if (i.addrs.size() != 1) throw ValidationError(ref, "L3 VLAN interface takes exactly one address");
        routers.at(i.node).add_interface(*i.vid, i.addrs[0].ip, i.addrs[0].prefix_len, i.zone);
      } else if (k == Kind::Firewall || k == Kind::Balancer) {
        if (!i.port) throw ValidationError(ref, "interface needs node:port");
        ref += ":" + std::to_string(*i.port);
        if (!iface_ports[i.node].insert(*i.port).second) throw ValidationError(ref, "duplicate interface port");
        if (k == Kind::Firewall) {
          firewalls.at(i.node).add_interface(*i.port, i.zone, i.addrs);
        } else if (i.path) {
          if (!i.next_hop || !i.peer) throw ValidationError(ref, "path interface needs nexthop= and peer=");
          if (!lb_paths[i.node].insert(*i.path).second) throw ValidationError(ref, "duplicate path");
          bool onlink = false;
          for (const auto& a : i.addrs) onlink |= a.network().contains(*i.next_hop);
          if (!onlink) throw ValidationError(ref, "nexthop not on the interface subnet");
        }
      } else {
        throw ValidationError(ref, "interfaces belong to l3 switches, firewalls and balancers");
      }
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(ref, e.what());
    }
  }
  for (const auto& b : c.balancers) {
    bool has_balanced = false;
    for (const auto& r : c.routes) has_balanced |= r.node == b.id && std::holds_alternative<Balanced>(r.via);
    if (lb_paths[b.id].size() != 2 && (has_balanced || !lb_paths[b.id].empty()))
      throw ValidationError(b.id, "balancer needs interfaces for path=1 and path=2");
  }

  for (const auto& h : c.hosts) {
    if (h.gateway && !h.addr.network().contains(*h.gateway))
      throw ValidationError(h.id, "gateway " + h.gateway->to_string() + " outside " + h.addr.network().to_string());
    if (!h.beamline.empty() && h.beamline.find_first_of(" \t") != std::string::npos)
      throw ValidationError(h.id, "bad beamline name");
  }

  std::set<std::string> link_ids;
  std::set<std::pair<std::string, int>> used_ports;
  for (const auto& l : c.links) {
    const std::string ref = "link " + l.id;
    if (!link_ids.insert(l.id).second) throw ValidationError(ref, "duplicate link id");
    if (nodes.count(l.id)) throw ValidationError(ref, "link id collides with a node id");
    for (const PortRef* end : {&l.a, &l.b}) {
      Kind k = kind_of(end->node, ref);
      if (!used_ports.insert({end->node, end->port}).second)
        throw ValidationError(ref, end->to_string() + " already has a link");
      if ((k == Kind::Switch || k == Kind::L3) && !bridges.at(end->node).has_port(end->port))
        throw ValidationError(ref, "undeclared switch port " + end->to_string());
      if ((k == Kind::Firewall || k == Kind::Balancer) && !iface_ports[end->node].count(end->port))
        throw ValidationError(ref, "no interface on " + end->to_string());
      if (k == Kind::Host && end->port != 0) throw ValidationError(ref, "hosts attach on port 0");
    }
    if (l.a.node == l.b.node) throw ValidationError(ref, "link loops back to its own node");
  }

  for (const auto& r : c.routes) {
    const std::string ref = "route " + r.node + " " + r.prefix.to_string();
    Kind k = kind_of(r.node, ref);
    try {
      if (k == Kind::L3) {
        if (std::holds_alternative<Balanced>(r.via)) throw ValidationError(ref, "only balancers take via=balanced");
        if (auto* v = std::get_if<VlanId>(&r.via)) routers.at(r.node).add_route(r.prefix, *v);
        else routers.at(r.node).add_route(r.prefix, std::get<Ipv4Address>(r.via));
      } else if (k == Kind::Firewall) {
        auto* g = std::get_if<Ipv4Address>(&r.via);
        if (!g) throw ValidationError(ref, "firewall routes need via=<gateway>");
        firewalls.at(r.node).add_route(r.prefix, *g);
      } else if (k == Kind::Balancer) {
        if (std::holds_alternative<VlanId>(r.via)) throw ValidationError(ref, "balancer routes take via=");
      } else {
        throw ValidationError(ref, "routes belong to l3 switches, firewalls and balancers");
      }
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(ref, e.what());
    }
  }

  for (const auto& a : c.acls) {
    Kind k = kind_of(a.node, "acl " + a.node);
    if (k != Kind::L3 && k != Kind::Firewall) throw ValidationError("acl " + a.node, "ACLs belong to l3 switches and firewalls");
  }
  for (const auto& m : c.masquerades) {
    const std::string ref = "masquerade " + m.node + " " + m.scope.to_string();
    if (kind_of(m.node, ref) != Kind::Firewall) throw ValidationError(ref, "masquerade belongs to a firewall");
    try {
      firewalls.at(m.node).add_scope({m.scope, m.external});
    } catch (const Error& e) {
      throw ValidationError(ref, e.what());
    }
  }

  std::set<std::string> traffic_ids;
  for (const auto& t : c.traffic) {
    const std::string ref = "traffic " + t.id;
    if (!traffic_ids.insert(t.id).second) throw ValidationError(ref, "duplicate traffic id");
    if (kind_of(t.src, ref) != Kind::Host) throw ValidationError(ref, "source must be a host");
    if (!nodes.count(t.dst) && !Ipv4Address::try_parse(t.dst))
      throw ValidationError(ref, "destination '" + t.dst + "' is neither a host nor an address");
    if (nodes.count(t.dst) && nodes.at(t.dst) != Kind::Host) throw ValidationError(ref, "destination must be a host");
    if (t.stop && *t.stop < t.start) throw ValidationError(ref, "stop before start");
  }
  for (const auto& f : c.faults) {
    const std::string ref = "fault " + f.target;
    bool is_link = link_ids.count(f.target) > 0;
    if (!nodes.count(f.target) && !is_link) throw ValidationError(ref, "unknown target");
    if (f.action == FaultAction::FailNode && !nodes.count(f.target)) throw ValidationError(ref, "fail_node needs a node");
    if (f.action == FaultAction::FailLink && !is_link) throw ValidationError(ref, "fail_link needs a link");
  }
  if (c.engine.probe_target && !(nodes.count(*c.engine.probe_target) && nodes.at(*c.engine.probe_target) == Kind::Host))
    throw ValidationError("engine probe_target", "unknown host '" + *c.engine.probe_target + "'");

  check_vlan_loops(c);
}

inline ScenarioConfig load_scenario(std::string_view text) {
  ScenarioConfig c = parse_scenario(text);
  validate_scenario(c);
  return c;
}

}  // namespace netfab
