#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "netfab/engine.hpp"
#include "netfab/verify.hpp"

namespace netfab {

namespace detail {

inline std::string fixed(double v, int digits) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", digits, v);
  return b;
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

inline std::string opt_time(const std::optional<Time>& t) { return t ? format_seconds(*t) : std::string("-"); }

}  // namespace detail

inline std::string format_metrics(const Metrics& m, const std::string& scenario = "") {
  using detail::fixed;
  using detail::pad;
  std::ostringstream o;
  if (!scenario.empty()) o << "scenario=" << scenario << "\n";
  o << "end_time_s=" << detail::format_seconds(m.end_time) << "\n";
  o << "events=" << m.events << "\n";
  o << "injected=" << m.injected << "\n";
  o << "delivered=" << m.delivered << "\n";
  o << "dropped=" << m.dropped_total() << "\n";
  o << "in_flight=" << m.in_flight << "\n";
  for (int r = 0; r < kDropReasonCount; ++r)
    if (m.dropped[r]) o << "dropped." << to_string(static_cast<DropReason>(r)) << "=" << m.dropped[r] << "\n";
  if (!m.trace_digest.empty()) {
    o << "trace_lines=" << m.trace_lines << "\n";
    o << "trace_digest=" << m.trace_digest << "\n";
  }

  if (!m.flows.empty()) {
    o << "\n" << pad("flow", 20) << pad("kind", 6) << pad("src", 12) << pad("dst", 14) << pad("sent", 10)
      << pad("delivered", 11) << pad("dropped", 9) << pad("replies", 9) << pad("goodput_mbps", 14) << "done_s\n";
    for (const auto& f : m.flows) {
      double mbps = 0;
      if (f.first_delivery && f.last_delivery && *f.last_delivery > *f.first_sent)
        mbps = static_cast<double>(f.delivered_bytes) * 8 / static_cast<double>(*f.last_delivery - *f.first_sent);
      o << pad(f.id, 20) << pad(to_string(f.kind), 6) << pad(f.src, 12) << pad(f.dst, 14)
        << pad(std::to_string(f.sent_packets), 10) << pad(std::to_string(f.delivered_packets), 11)
        << pad(std::to_string(f.dropped_packets), 9) << pad(std::to_string(f.replies), 9) << pad(fixed(mbps, 3), 14)
        << detail::opt_time(f.completed) << "\n";
    }
  }
  if (!m.firewalls.empty()) {
    o << "\n" << pad("firewall", 12) << pad("forwarded_bytes", 17) << pad("nat", 6) << pad("queue", 7) << "drops\n";
    for (const auto& f : m.firewalls) {
      std::string drops;
      for (int r = 0; r < kDropReasonCount; ++r)
        if (f.drops[r]) drops += std::string(drops.empty() ? "" : ",") + to_string(static_cast<DropReason>(r)) + ":" + std::to_string(f.drops[r]);
      o << pad(f.id, 12) << pad(std::to_string(f.forwarded_bytes), 17) << pad(std::to_string(f.nat_size), 6)
        << pad(std::to_string(f.queue), 7) << (drops.empty() ? "-" : drops) << "\n";
    }
  }
  if (!m.balancers.empty()) {
    o << "\n" << pad("balancer", 12) << pad("path", 6) << pad("state", 7) << pad("dispatched", 12) << "last_dispatch_s\n";
    for (const auto& b : m.balancers)
      for (int p = 0; p < 2; ++p)
        o << pad(b.id, 12) << pad(path_name(p), 6) << pad(to_string(b.state[p]), 7)
          << pad(std::to_string(b.dispatched[p]), 12) << detail::opt_time(b.last_dispatch[p]) << "\n";
  }
  // Busiest links only; large scenarios have hundreds.
  std::vector<const LinkMetrics*> links;
  for (const auto& l : m.links)
    if (l.dir[0].bytes + l.dir[1].bytes > 0 || !l.up) links.push_back(&l);
  std::stable_sort(links.begin(), links.end(), [](const LinkMetrics* a, const LinkMetrics* b) {
    return a->dir[0].bytes + a->dir[1].bytes > b->dir[0].bytes + b->dir[1].bytes;
  });
  if (links.size() > 12) links.resize(12);
  if (!links.empty()) {
    o << "\n" << pad("link", 14) << pad("bw_mbps", 9) << pad("up", 4) << pad("tx_bytes_ab", 14) << pad("tx_bytes_ba", 14)
      << "drops\n";
    for (const auto* l : links)
      o << pad(l->id, 14) << pad(fixed(static_cast<double>(l->bandwidth) / 1e6, 0), 9) << pad(l->up ? "y" : "n", 4)
        << pad(std::to_string(l->dir[0].bytes), 14) << pad(std::to_string(l->dir[1].bytes), 14)
        << l->dir[0].drops + l->dir[1].drops << "\n";
  }
  return o.str();
}

inline std::string format_verify(const VerifyResult& r, const std::string& scenario = "") {
  std::ostringstream o;
  if (!scenario.empty()) o << "scenario=" << scenario << "\n";
  o << "invariant=" << r.invariant << "\n";
  o << "result=" << (r.pass ? "pass" : "fail") << "\n";
  o << "summary=" << r.summary << "\n";
  for (const auto& [k, v] : r.facts) o << k << "=" << v << "\n";
  if (!r.excerpt.empty()) {
    o << "\ntrace excerpt:\n";
    for (const auto& l : r.excerpt) o << "  " << l << "\n";
  }
  return o.str();
}

inline std::string format_status(const StatusReport& s) {
  using detail::pad;
  std::ostringstream o;
  o << "at_s=" << detail::format_seconds(s.at) << "\n";
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + x;
    return out.empty() ? std::string("-") : out;
  };
  o << "failed_nodes=" << join(s.failed_nodes) << "\n";
  o << "failed_links=" << join(s.failed_links) << "\n";
  std::vector<std::string> affected;
  for (const auto& a : s.affected)
    affected.push_back(a.name + (a.vid ? "(" + std::to_string(a.vid->value()) + ")" : ""));
  o << "affected_beamlines=" << join(affected) << "\n";
  o << "affected_count=" << s.affected.size() << "\n";
  for (const auto& n : s.nodes) {
    o << "\nnode=" << n.id << " kind=" << to_string(n.kind) << " state=" << (n.up ? "up" : "down");
    if (n.kind == NodeKind::Switch || n.kind == NodeKind::L3) o << " fdb=" << n.fdb_size;
    if (n.kind == NodeKind::Firewall) o << " nat=" << n.nat_size << " queue=" << n.queue;
    if (n.kind == NodeKind::Firewall || n.kind == NodeKind::L3) o << " conns=" << n.conn_size;
    for (const auto& [p, st] : n.paths) o << " " << p << "=" << to_string(st);
    o << "\n";
    for (const auto& p : n.ports) {
      o << "  port " << pad(std::to_string(p.port), 4) << pad(p.up ? "up" : "down", 6) << pad(p.mode, 24);
      if (p.counters)
        o << "rx=" << p.counters->rx_frames << " tx=" << p.counters->tx_frames << " drop=" << p.counters->drop_frames;
      o << "\n";
    }
  }
  return o.str();
}

}  // namespace netfab
