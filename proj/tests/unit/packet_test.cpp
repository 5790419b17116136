#include <random>

#include "errc.hpp"
#include "netfab/packet.hpp"

using namespace netfab;

namespace {

Frame plain(std::uint32_t size = 64) {
  return Frame::raw(MacAddress::parse("00:10:4b:00:00:01"), MacAddress::parse("00:10:4b:00:00:02"), size);
}

}  // namespace

TEST(Tagging, PushSetsVidAndGrowsFrame) {
  Frame t = push_tag(plain(), VlanId(5));
  ASSERT_TRUE(t.tag);
  EXPECT_EQ(t.tag->vid.value(), 5);
  EXPECT_EQ(t.tag->tpid, 0x8100);
  EXPECT_EQ(t.size_bytes, 68u);
}

TEST(Tagging, DoubleTagRejected) {
  Frame t = push_tag(plain(), VlanId(7));
  EXPECT_ERRC(push_tag(t, VlanId(9)), Errc::AlreadyTagged);
}

TEST(Tagging, PopOfUntaggedRejected) { EXPECT_ERRC(pop_tag(plain()), Errc::NotTagged); }

TEST(Tagging, PopReturnsVid) {
  auto [f, vid] = pop_tag(push_tag(plain(), VlanId(62)));
  EXPECT_EQ(vid.value(), 62);
  EXPECT_FALSE(f.tag);
}

TEST(Tagging, MaxTaggedPopsToMaxUntagged) {
  Frame t = push_tag(plain(Frame::kMaxUntagged), VlanId(3));
  EXPECT_EQ(t.size_bytes, Frame::kMaxTagged);
  EXPECT_EQ(pop_tag(t).first.size_bytes, Frame::kMaxUntagged);
}

TEST(Tagging, VidRange) {
  EXPECT_ERRC(VlanId(0), Errc::InvalidVid);
  EXPECT_ERRC(VlanId(4095), Errc::InvalidVid);
  EXPECT_EQ(VlanId(4094).value(), 4094);
  EXPECT_ERRC(push_tag(plain(), VlanId(1), 8), Errc::InvalidArgument);
}

TEST(Tagging, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto size = static_cast<std::uint32_t>(Frame::kMinSize + rng() % (Frame::kMaxUntagged - Frame::kMinSize + 1));
    Frame f = Frame::raw(MacAddress::from_u64(rng() & 0xfeffffffffffULL), MacAddress::from_u64(rng() & 0xffffffffffffULL), size);
    VlanId vid(static_cast<int>(1 + rng() % 4094));
    int pcp = static_cast<int>(rng() % 8);
    Frame t = push_tag(f, vid, pcp);
    EXPECT_NO_THROW(t.check());
    auto [back, got] = pop_tag(t);
    ASSERT_EQ(got, vid);
    EXPECT_EQ(back.size_bytes, f.size_bytes);
    EXPECT_EQ(back.src, f.src);
    EXPECT_EQ(back.dst, f.dst);
    EXPECT_FALSE(back.tag);
  }
}

TEST(Frame, SizeBounds) {
  EXPECT_ERRC(plain(63).check(), Errc::InvalidFrame);
  EXPECT_ERRC(plain(1519).check(), Errc::InvalidFrame);
  EXPECT_NO_THROW(plain(1518).check());
  Packet big = make_packet(Protocol::Udp, Ipv4Address::parse("10.0.0.1"), 1, Ipv4Address::parse("10.0.0.2"), 2, 1473);
  EXPECT_ERRC(Frame::carrying(MacAddress::from_u64(2), MacAddress::from_u64(4), big), Errc::InvalidFrame);
  Packet full = make_packet(Protocol::Udp, Ipv4Address::parse("10.0.0.1"), 1, Ipv4Address::parse("10.0.0.2"), 2, 1472);
  EXPECT_EQ(Frame::carrying(MacAddress::from_u64(2), MacAddress::from_u64(4), full).size_bytes, 1518u);
  Packet tiny = make_packet(Protocol::Icmp, Ipv4Address::parse("10.0.0.1"), 0, Ipv4Address::parse("10.0.0.2"), 0, 0);
  EXPECT_EQ(Frame::carrying(MacAddress::from_u64(2), MacAddress::from_u64(4), tiny).size_bytes, 64u);
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify_dst(MacAddress::parse("ff:ff:ff:ff:ff:ff")), DstClass::Broadcast);
  EXPECT_EQ(classify_dst(MacAddress::parse("01:00:5e:00:00:01")), DstClass::Multicast);
  EXPECT_EQ(classify_dst(MacAddress::parse("00:10:4b:aa:bb:cc")), DstClass::Unicast);
}

TEST(Classify, PartitionMatchesGroupBit) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    std::uint64_t v = rng() & 0xffffffffffffULL;
    if (i % 100 == 0) v = 0xffffffffffffULL;
    auto m = MacAddress::from_u64(v);
    bool group = (v >> 40) & 1;
    DstClass want = v == 0xffffffffffffULL ? DstClass::Broadcast : group ? DstClass::Multicast : DstClass::Unicast;
    EXPECT_EQ(classify_dst(m), want);
  }
}

TEST(Mac, ParsePrintRoundTrip) {
  auto m = MacAddress::parse("02:1a:2b:3c:4d:5e");
  EXPECT_EQ(m.to_string(), "02:1a:2b:3c:4d:5e");
  EXPECT_FALSE(MacAddress::try_parse("02:1a:2b:3c:4d"));
  EXPECT_FALSE(MacAddress::try_parse("zz:1a:2b:3c:4d:5e"));
}

TEST(FlowKeyTest, FiveTuple) {
  Packet p = make_packet(Protocol::Tcp, Ipv4Address::parse("10.1.1.2"), 4000, Ipv4Address::parse("192.0.2.9"), 80, 10);
  FlowKey k = flow_key(p);
  EXPECT_EQ(k.src_ip, Ipv4Address::parse("10.1.1.2"));
  EXPECT_EQ(k.dst_ip, Ipv4Address::parse("192.0.2.9"));
  EXPECT_EQ(k.src_port, 4000);
  EXPECT_EQ(k.dst_port, 80);
  EXPECT_EQ(k.protocol, Protocol::Tcp);
  p.payload_bytes = 900;
  EXPECT_EQ(flow_key(p), k);
  EXPECT_EQ(k.reversed().reversed(), k);
}

TEST(FlowKeyTest, IcmpHasNoPorts) {
  Packet p = make_packet(Protocol::Icmp, Ipv4Address::parse("10.0.0.1"), 0, Ipv4Address::parse("10.0.0.2"), 0, 56);
  p.src_port = 7;
  p.dst_port = 9;
  FlowKey k = flow_key(p);
  EXPECT_EQ(k.src_port, 0);
  EXPECT_EQ(k.dst_port, 0);
}

TEST(PacketTest, NetworkBytes) {
  auto a = Ipv4Address::parse("10.0.0.1"), b = Ipv4Address::parse("10.0.0.2");
  EXPECT_EQ(make_packet(Protocol::Tcp, a, 1, b, 2, 1460).network_bytes(), 1500u);
  EXPECT_EQ(make_packet(Protocol::Udp, a, 1, b, 2, 1472).network_bytes(), 1500u);
  EXPECT_EQ(make_packet(Protocol::Icmp, a, 0, b, 0, 56).network_bytes(), 84u);
}
