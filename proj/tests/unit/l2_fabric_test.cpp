#include <map>
#include <random>

#include "errc.hpp"
#include "netfab/l2_fabric.hpp"

using namespace netfab;

namespace {

MacAddress mac(int n) { return MacAddress::from_u64(0x020000000000ULL | static_cast<std::uint64_t>(n)); }

Frame frame(int src, int dst) { return Frame::raw(mac(src), mac(dst), 100); }
Frame bcast(int src) { return Frame::raw(mac(src), MacAddress::broadcast(), 64); }

PortConfig access(int id, int vid) { return {id, AccessMode{VlanId(vid)}, true, std::nullopt}; }
PortConfig trunk(int id, std::set<VlanId> allowed, std::optional<int> lag = std::nullopt) {
  return {id, TrunkMode{std::move(allowed)}, true, lag};
}

}  // namespace

TEST(Switch, BroadcastStaysInVlan) {
  Switch s;
  s.add_port(access(1, 10));
  s.add_port(access(2, 10));
  s.add_port(access(3, 20));
  s.add_port(trunk(4, {VlanId(10), VlanId(20)}));
  auto out = s.ingress(1, bcast(1), 0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].port, 2);
  EXPECT_FALSE(out[0].frame.tag);
  EXPECT_EQ(out[1].port, 4);
  ASSERT_TRUE(out[1].frame.tag);
  EXPECT_EQ(out[1].frame.tag->vid.value(), 10);
  EXPECT_EQ(s.counters(3).tx_frames, 0u);
}

TEST(Switch, LearnsThenForwardsToOnePort) {
  Switch s;
  for (int p = 1; p <= 4; ++p) s.add_port(access(p, 10));
  EXPECT_EQ(s.ingress(1, frame(0xa, 0xb), 0).size(), 3u);
  auto back = s.ingress(2, frame(0xb, 0xa), 1);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].port, 1);
  auto third = s.ingress(1, frame(0xa, 0xb), 2);
  ASSERT_EQ(third.size(), 1u);
  EXPECT_EQ(third[0].port, 2);
}

TEST(Switch, DisallowedVidDropped) {
  Switch s;
  s.add_port(trunk(1, {VlanId(10), VlanId(20)}));
  s.add_port(trunk(2, {VlanId(10), VlanId(20), VlanId(30)}));
  EXPECT_TRUE(s.ingress(1, push_tag(bcast(1), VlanId(30)), 0).empty());
  EXPECT_EQ(s.counters(1).drop_frames, 1u);
}

TEST(Switch, TaggedOnAccessAndUntaggedOnTrunkDropped) {
  Switch s;
  s.add_port(access(1, 10));
  s.add_port(trunk(2, {VlanId(10)}));
  EXPECT_TRUE(s.ingress(1, push_tag(bcast(1), VlanId(10)), 0).empty());
  EXPECT_TRUE(s.ingress(2, bcast(1), 0).empty());
  EXPECT_EQ(s.counters(1).drop_frames + s.counters(2).drop_frames, 2u);
}

TEST(Switch, EmptyTrunkRejected) {
  Switch s;
  EXPECT_ERRC(s.add_port(trunk(1, {})), Errc::InvalidVid);
  s.add_port(access(1, 10));
  EXPECT_ERRC(s.configure_port(1, TrunkMode{}), Errc::InvalidVid);
  EXPECT_ERRC(s.ingress(9, bcast(1), 0), Errc::UnknownPort);
}

TEST(Switch, ReassignWithoutRecabling) {
  Switch s;
  s.add_port(access(1, 10));
  s.add_port(access(2, 10));
  s.add_port(access(3, 20));
  s.ingress(2, bcast(2), 0);
  s.configure_port(1, AccessMode{VlanId(20)});
  auto out = s.ingress(1, bcast(1), 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].port, 3);
  // unicast to a VLAN-10 peer it knew about is now flooded in VLAN 20 only
  out = s.ingress(1, frame(1, 2), 2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].port, 3);
}

TEST(Switch, LinkDownIngressThrowsAndFlushes) {
  Switch s;
  s.add_port(access(1, 10));
  s.add_port(access(2, 10));
  s.ingress(1, bcast(1), 0);
  ASSERT_TRUE(s.lookup(VlanId(10), mac(1)));
  s.set_link(1, false);
  EXPECT_FALSE(s.lookup(VlanId(10), mac(1)));
  EXPECT_ERRC(s.ingress(1, bcast(1), 0), Errc::LinkDown);
}

TEST(Aging, StrictBoundary) {
  Switch s(300 * kSecond);
  s.add_port(access(1, 10));
  s.add_port(access(2, 10));
  s.ingress(1, bcast(1), 0);
  s.age_fdb(300 * kSecond);
  EXPECT_EQ(s.fdb_size(), 1u);
  s.age_fdb(301 * kSecond);
  EXPECT_EQ(s.fdb_size(), 0u);
  s.age_fdb(400 * kSecond);
  EXPECT_EQ(s.fdb_size(), 0u);
}

TEST(Aging, StaticEntriesSurvive) {
  Switch s(kSecond);
  s.add_port(access(1, 10));
  s.add_static_entry(VlanId(10), mac(5), 1);
  s.age_fdb(1000 * kSecond);
  EXPECT_EQ(s.lookup(VlanId(10), mac(5)), 1);
}

TEST(Lag, SingleMember) {
  LagMember m[] = {{7, true}};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    FlowKey k{Ipv4Address(static_cast<std::uint32_t>(rng())), Ipv4Address(static_cast<std::uint32_t>(rng())), Protocol::Udp, 1, 2};
    EXPECT_EQ(lag_select(m, k), 7);
  }
}

TEST(Lag, DeterministicAndBalanced) {
  LagMember m[] = {{1, true}, {2, true}};
  std::mt19937_64 rng(42);
  std::map<int, int> hits;
  for (int i = 0; i < 10000; ++i) {
    FlowKey k{Ipv4Address(static_cast<std::uint32_t>(rng())), Ipv4Address(static_cast<std::uint32_t>(rng())),
              Protocol::Tcp, static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng())};
    int p = lag_select(m, k, 99);
    EXPECT_EQ(lag_select(m, k, 99), p);
    hits[p]++;
  }
  EXPECT_NEAR(hits[1], 5000, 500);
  EXPECT_NEAR(hits[2], 5000, 500);
}

TEST(Lag, FailureRemapsOnlyItsFlows) {
  LagMember all[] = {{1, true}, {2, true}, {3, true}};
  LagMember one_dead[] = {{1, true}, {2, false}, {3, true}};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 3000; ++i) {
    FlowKey k{Ipv4Address(static_cast<std::uint32_t>(rng())), Ipv4Address(static_cast<std::uint32_t>(rng())), Protocol::Udp,
              static_cast<std::uint16_t>(rng()), 9};
    int before = lag_select(all, k);
    int after = lag_select(one_dead, k);
    EXPECT_NE(after, 2);
    if (before != 2) { EXPECT_EQ(after, before); }
  }
  LagMember none[] = {{1, false}};
  EXPECT_ERRC(lag_select(none, FlowKey{}), Errc::NoLiveMember);
}

TEST(Lag, FloodUsesOneGroupMember) {
  Switch s;
  s.add_port(access(1, 10));
  s.add_port(trunk(2, {VlanId(10)}, 1));
  s.add_port(trunk(3, {VlanId(10)}, 1));
  auto out = s.ingress(1, bcast(1), 0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].port == 2 || out[0].port == 3);
  // frames entering on one member are not echoed onto the other
  EXPECT_TRUE(s.ingress(2, push_tag(bcast(9), VlanId(10)), 0).size() == 1);
}

// Random single-switch configurations against a direct membership oracle.
TEST(Switch, FloodSetMatchesMembershipOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Switch s;
    int nports = 2 + static_cast<int>(rng() % 10);
    std::map<int, PortConfig> cfg;
    for (int p = 1; p <= nports; ++p) {
      PortConfig pc = rng() % 3 ? access(p, 1 + static_cast<int>(rng() % 4)) : trunk(p, {});
      if (is_trunk(pc.mode)) {
        auto& t = std::get<TrunkMode>(pc.mode);
        for (int v = 1; v <= 4; ++v)
          if (rng() % 2) t.allowed.insert(VlanId(v));
        if (t.allowed.empty()) t.allowed.insert(VlanId(1));
      }
      cfg[p] = pc;
      s.add_port(pc);
    }
    int in = 1 + static_cast<int>(rng() % nports);
    int vid = 1 + static_cast<int>(rng() % 4);
    Frame f = bcast(1000 + trial);
    if (is_trunk(cfg[in].mode)) f = push_tag(f, VlanId(vid));
    else vid = std::get<AccessMode>(cfg[in].mode).vid.value();
    std::vector<int> want;
    if (is_member(cfg[in].mode, VlanId(vid)))
      for (auto& [p, c] : cfg)
        if (p != in && is_member(c.mode, VlanId(vid))) want.push_back(p);
    std::vector<int> got;
    for (auto& e : s.ingress(in, f, 0)) {
      got.push_back(e.port);
      EXPECT_EQ(e.frame.tag.has_value(), is_trunk(cfg[e.port].mode));
      if (e.frame.tag) { EXPECT_EQ(e.frame.tag->vid.value(), vid); }
    }
    EXPECT_EQ(got, want);
  }
}
