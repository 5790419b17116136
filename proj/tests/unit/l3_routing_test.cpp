#include <random>

#include "errc.hpp"
#include "netfab/l3_routing.hpp"

using namespace netfab;

namespace {

Ipv4Address ip(const char* s) { return Ipv4Address::parse(s); }
Ipv4Network net(const char* s) { return Ipv4Network::parse(s); }

Packet tcp(const char* src, std::uint16_t sp, const char* dst, std::uint16_t dp) {
  return make_packet(Protocol::Tcp, ip(src), sp, ip(dst), dp, 0);
}

// dmz 10 (10.1.1.0/24), dmz 20 (10.1.2.0/24), public 30 (192.0.2.0/24)
L3Switch zoned() {
  L3Switch r;
  r.add_interface(VlanId(10), ip("10.1.1.1"), 24, Zone::Dmz);
  r.add_interface(VlanId(20), ip("10.1.2.1"), 24, Zone::Dmz);
  r.add_interface(VlanId(30), ip("192.0.2.1"), 24, Zone::Public);
  return r;
}

}  // namespace

TEST(Interfaces, SixtySixAccepted) {
  L3Switch r;
  for (int k = 1; k <= 66; ++k)
    r.add_interface(VlanId(k), Ipv4Address(10, 0, static_cast<std::uint8_t>(k), 1), 24, Zone::Dmz);
  EXPECT_EQ(r.interfaces().size(), 66u);
}

TEST(Interfaces, Conflicts) {
  L3Switch r;
  r.add_interface(VlanId(5), ip("10.0.5.1"), 24, Zone::Dmz);
  EXPECT_ERRC(r.add_interface(VlanId(5), ip("10.0.6.1"), 24, Zone::Dmz), Errc::DuplicateVid);
  r.add_interface(VlanId(1), ip("10.0.1.1"), 24, Zone::Dmz);
  EXPECT_ERRC(r.add_interface(VlanId(2), ip("10.0.1.129"), 25, Zone::Dmz), Errc::OverlappingSubnet);
}

TEST(Routes, LongestPrefixWins) {
  L3Switch r;
  r.add_interface(VlanId(1), ip("10.9.0.1"), 24, Zone::Dmz);
  r.add_interface(VlanId(2), ip("10.8.0.1"), 24, Zone::Dmz);
  r.add_route(net("10.0.0.0/16"), ip("10.9.0.2"));
  r.add_route(net("10.0.1.0/24"), ip("10.8.0.2"));
  EXPECT_EQ(std::get<Ipv4Address>(r.route_lookup(ip("10.0.1.7"))->next_hop), ip("10.8.0.2"));
  EXPECT_EQ(std::get<Ipv4Address>(r.route_lookup(ip("10.0.2.7"))->next_hop), ip("10.9.0.2"));
  EXPECT_FALSE(r.route_lookup(ip("192.0.2.1")));
  EXPECT_ERRC(r.add_route(net("10.0.0.0/16"), ip("10.9.0.3")), Errc::DuplicateRoute);
  EXPECT_ERRC(r.add_route(net("10.7.0.0/16"), ip("172.16.0.1")), Errc::InvalidRoute);
  EXPECT_ERRC(r.add_route(net("10.7.0.0/16"), VlanId(99)), Errc::InvalidRoute);
}

TEST(Routes, MatchesBruteForceOracle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    L3Switch r;
    r.add_interface(VlanId(1), ip("10.255.0.1"), 24, Zone::Dmz);
    std::vector<std::pair<Ipv4Network, std::uint32_t>> table{{net("10.255.0.0/24"), 0}};
    for (int i = 0; i < 60; ++i) {
      int len = static_cast<int>(rng() % 33);
      std::uint32_t mask = len ? ~0u << (32 - len) : 0;
      Ipv4Network n(Ipv4Address(static_cast<std::uint32_t>(rng() % 4 == 0 ? rng() : (0x0a000000u | (rng() & 0xffffff))) & mask), len);
      bool dup = false;
      for (auto& [e, tag] : table) dup = dup || (e.base == n.base && e.prefix_len == n.prefix_len);
      if (dup) continue;
      std::uint32_t gw = 2 + static_cast<std::uint32_t>(rng() % 200);
      r.add_route(n, Ipv4Address(0x0aff0000u | gw));
      table.push_back({n, gw});
    }
    for (int q = 0; q < 500; ++q) {
      Ipv4Address a(static_cast<std::uint32_t>(q % 2 ? rng() : (0x0a000000u | (rng() & 0xffffff))));
      int best = -1;
      std::uint32_t want = 0;
      for (auto& [e, tag] : table)
        if (e.contains(a) && e.prefix_len > best) best = e.prefix_len, want = tag;
      auto got = r.route_lookup(a);
      ASSERT_EQ(got.has_value(), best >= 0);
      if (!got) continue;
      EXPECT_EQ(got->prefix.prefix_len, best);
      if (want == 0) { EXPECT_EQ(std::get<VlanId>(got->next_hop), VlanId(1)); }
      else EXPECT_EQ(std::get<Ipv4Address>(got->next_hop).value, 0x0aff0000u | want);
    }
  }
}

TEST(Forward, NoRouteAndTtl) {
  L3Switch r = zoned();
  auto res = r.forward(tcp("10.1.1.5", 1, "8.8.8.8", 53), VlanId(10), 0);
  EXPECT_EQ(std::get<Dropped>(res).reason, DropReason::NoRoute);
  Packet p = tcp("10.1.1.5", 1, "10.1.2.5", 22);
  p.ttl = 1;
  EXPECT_EQ(std::get<Dropped>(r.forward(p, VlanId(10), 0)).reason, DropReason::Ttl);
  p.ttl = 9;
  auto ok = std::get<Forwarded>(r.forward(p, VlanId(10), 0));
  EXPECT_EQ(ok.egress, VlanId(20));
  EXPECT_EQ(ok.packet.ttl, 8);
  EXPECT_EQ(ok.next_hop, ip("10.1.2.5"));
  EXPECT_ERRC(r.forward(p, VlanId(99), 0), Errc::UnknownInterface);
}

TEST(Forward, PublicCannotOpenToDmz) {
  L3Switch r = zoned();
  auto res = r.forward(tcp("192.0.2.9", 5000, "10.1.1.5", 22), VlanId(30), 0);
  EXPECT_EQ(std::get<Dropped>(res).reason, DropReason::Acl);
}

TEST(Forward, RepliesOnEstablishedConnection) {
  L3Switch r = zoned();
  ASSERT_TRUE(std::holds_alternative<Forwarded>(r.forward(tcp("10.1.1.5", 4000, "192.0.2.9", 80), VlanId(10), 0)));
  EXPECT_TRUE(std::holds_alternative<Forwarded>(r.forward(tcp("192.0.2.9", 80, "10.1.1.5", 4000), VlanId(30), kSecond)));
  // a different port tuple is still new
  EXPECT_TRUE(std::holds_alternative<Dropped>(r.forward(tcp("192.0.2.9", 81, "10.1.1.5", 4000), VlanId(30), kSecond)));
  // and the connection expires
  EXPECT_TRUE(std::holds_alternative<Dropped>(
      r.forward(tcp("192.0.2.9", 80, "10.1.1.5", 4000), VlanId(30), ConnTable::kDefaultTimeout + 2 * kSecond)));
}

TEST(Policy, Defaults) {
  ZonePolicy p;
  EXPECT_EQ(p.verdict(Zone::Clean, Zone::Dmz), AclVerdict::Permit);
  EXPECT_EQ(p.verdict(Zone::Clean, Zone::Public), AclVerdict::Permit);
  EXPECT_EQ(p.verdict(Zone::Dmz, Zone::Public), AclVerdict::Permit);
  EXPECT_EQ(p.verdict(Zone::Dmz, Zone::Clean), AclVerdict::DenyNew);
  EXPECT_EQ(p.verdict(Zone::Public, Zone::Dmz), AclVerdict::DenyNew);
  EXPECT_EQ(p.verdict(Zone::Public, Zone::Clean), AclVerdict::DenyNew);
  for (Zone z : {Zone::Clean, Zone::Dmz, Zone::Public}) EXPECT_EQ(p.verdict(z, z), AclVerdict::Permit);
}

TEST(ConnTableTest, SweepStrict) {
  ConnTable t(600 * kSecond);
  FlowKey k{ip("10.0.0.1"), ip("10.0.0.2"), Protocol::Tcp, 1, 2};
  t.record(k, 0);
  t.sweep(600 * kSecond);
  EXPECT_EQ(t.size(), 1u);
  t.sweep(601 * kSecond);
  EXPECT_EQ(t.size(), 0u);
}

// Random packet sequences: a public-sourced packet only ever crosses into the
// dmz when the mirrored tuple was forwarded out before.
TEST(Forward, NoUnsolicitedPublicToDmz) {
  std::mt19937_64 rng(31);
  const char* inside[] = {"10.1.1.5", "10.1.1.6", "10.1.2.7"};
  const char* outside[] = {"192.0.2.9", "192.0.2.10"};
  for (int trial = 0; trial < 50; ++trial) {
    L3Switch r = zoned();
    std::set<FlowKey> opened;
    for (int i = 0; i < 200; ++i) {
      const char* in = inside[rng() % 3];
      const char* out = outside[rng() % 2];
      auto sp = static_cast<std::uint16_t>(1000 + rng() % 3), dp = static_cast<std::uint16_t>(80 + rng() % 2);
      Time now = static_cast<Time>(i) * kMillisecond;
      if (rng() % 2) {
        Packet p = tcp(in, sp, out, dp);
        VlanId vid(Ipv4Network::parse("10.1.1.0/24").contains(ip(in)) ? 10 : 20);
        if (std::holds_alternative<Forwarded>(r.forward(p, vid, now))) opened.insert(flow_key(p));
      } else {
        Packet p = tcp(out, dp, in, sp);
        bool fwd = std::holds_alternative<Forwarded>(r.forward(p, VlanId(30), now));
        EXPECT_EQ(fwd, opened.count(flow_key(p).reversed()) > 0);
      }
    }
  }
}
