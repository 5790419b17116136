#include <random>

#include "errc.hpp"
#include "netfab/firewall_nat.hpp"

using namespace netfab;

namespace {

Ipv4Address ip(const char* s) { return Ipv4Address::parse(s); }
Ipv4Network net(const char* s) { return Ipv4Network::parse(s); }

Packet tcp(const char* src, std::uint16_t sp, const char* dst, std::uint16_t dp, std::uint32_t payload = 0) {
  return make_packet(Protocol::Tcp, ip(src), sp, ip(dst), dp, payload);
}

Firewall masq(std::vector<MasqueradeScope> scopes) {
  FirewallConfig cfg;
  cfg.inside_prefixes = {net("10.1.0.0/16")};
  Firewall fw(cfg);
  fw.add_interface(1, Zone::Dmz, {InterfaceAddress::parse("10.1.1.1/24")});
  fw.add_interface(2, Zone::Public, {InterfaceAddress::parse("192.0.2.1/24"), InterfaceAddress::parse("198.51.100.1/24"),
                                     InterfaceAddress::parse("203.0.113.1/24")});
  for (auto& s : scopes) fw.add_scope(s);
  return fw;
}

Firewall single_scope() { return masq({{net("0.0.0.0/0"), ip("203.0.113.1")}}); }

}  // namespace

TEST(Masquerade, LowestFreePortsInOrder) {
  Firewall fw = single_scope();
  auto a = std::get<Packet>(fw.masquerade_out(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 0));
  EXPECT_EQ(a.src_ip, ip("203.0.113.1"));
  EXPECT_EQ(a.src_port, 1024);
  EXPECT_EQ(a.dst_ip, ip("192.0.2.9"));
  auto b = std::get<Packet>(fw.masquerade_out(tcp("10.1.1.5", 4001, "192.0.2.9", 80), 0));
  EXPECT_EQ(b.src_port, 1025);
  // same flow reuses its binding
  EXPECT_EQ(std::get<Packet>(fw.masquerade_out(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 1)).src_port, 1024);
  EXPECT_EQ(fw.nat_size(), 2u);
}

TEST(Masquerade, DestinationSelectsScope) {
  Firewall fw = masq({{net("198.51.100.0/24"), ip("203.0.113.1")}, {net("0.0.0.0/0"), ip("192.0.2.1")}});
  EXPECT_EQ(std::get<Packet>(fw.masquerade_out(tcp("10.1.1.5", 1, "198.51.100.7", 80), 0)).src_ip, ip("203.0.113.1"));
  EXPECT_EQ(std::get<Packet>(fw.masquerade_out(tcp("10.1.1.5", 1, "8.8.8.8", 80), 0)).src_ip, ip("192.0.2.1"));
}

TEST(Masquerade, NoScope) {
  Firewall fw = masq({{net("198.51.100.0/24"), ip("203.0.113.1")}});
  EXPECT_EQ(std::get<DropReason>(fw.masquerade_out(tcp("10.1.1.5", 1, "8.8.8.8", 80), 0)), DropReason::NoScope);
}

TEST(Masquerade, ReplyReverseTranslates) {
  Firewall fw = single_scope();
  fw.masquerade_out(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 0);
  auto in = std::get<Packet>(fw.masquerade_in(tcp("192.0.2.9", 80, "203.0.113.1", 1024), kSecond));
  EXPECT_EQ(in.dst_ip, ip("10.1.1.5"));
  EXPECT_EQ(in.dst_port, 4000);
  EXPECT_EQ(in.src_ip, ip("192.0.2.9"));
}

TEST(Masquerade, UnsolicitedAndExpired) {
  Firewall fw = single_scope();
  EXPECT_EQ(std::get<DropReason>(fw.masquerade_in(tcp("192.0.2.9", 80, "203.0.113.1", 5000), 0)), DropReason::NoBinding);
  fw.masquerade_out(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 0);
  EXPECT_EQ(std::get<DropReason>(fw.masquerade_in(tcp("192.0.2.9", 80, "203.0.113.1", 1024), 601 * kSecond)),
            DropReason::NoBinding);
}

TEST(Masquerade, IcmpIdentActsAsPort) {
  Firewall fw = single_scope();
  Packet echo = make_packet(Protocol::Icmp, ip("10.1.1.5"), 0, ip("192.0.2.9"), 0, 56);
  echo.op = PacketOp::Request;
  echo.ident = 77;
  auto out = std::get<Packet>(fw.masquerade_out(echo, 0));
  EXPECT_EQ(out.ident, 1024);
  Packet reply = make_packet(Protocol::Icmp, ip("192.0.2.9"), 0, ip("203.0.113.1"), 0, 56);
  reply.op = PacketOp::Reply;
  reply.ident = 1024;
  auto back = std::get<Packet>(fw.masquerade_in(reply, 1));
  EXPECT_EQ(back.dst_ip, ip("10.1.1.5"));
  EXPECT_EQ(back.ident, 77);
}

TEST(Masquerade, ScopeCapacity) {
  FirewallConfig cfg;
  cfg.scope_capacity = 64;
  Firewall fw(cfg);
  for (int k = 0; k < 64; ++k)
    fw.add_scope({Ipv4Network(Ipv4Address(10, static_cast<std::uint8_t>(k), 0, 0), 16), ip("203.0.113.1")});
  EXPECT_EQ(fw.scopes().size(), 64u);
  EXPECT_ERRC(fw.add_scope({net("11.0.0.0/8"), ip("203.0.113.1")}), Errc::CapacityExceeded);
}

TEST(Masquerade, PoolExhaustedAtCapacity) {
  FirewallConfig cfg;
  cfg.nat_capacity = 3;
  Firewall fw(cfg);
  fw.add_scope({net("0.0.0.0/0"), ip("203.0.113.1")});
  for (std::uint16_t p = 1; p <= 3; ++p) EXPECT_TRUE(std::holds_alternative<Packet>(fw.masquerade_out(tcp("10.1.1.5", p, "1.1.1.1", 80), 0)));
  EXPECT_EQ(std::get<DropReason>(fw.masquerade_out(tcp("10.1.1.5", 9, "1.1.1.1", 80), 0)), DropReason::PoolExhausted);
}

TEST(Masquerade, BijectionUnderRandomTraffic) {
  std::mt19937_64 rng(4);
  Firewall fw = masq({{net("198.51.100.0/24"), ip("203.0.113.1")}, {net("0.0.0.0/0"), ip("192.0.2.1")}});
  std::map<std::pair<std::uint32_t, std::uint16_t>, std::pair<std::uint32_t, std::uint16_t>> out_to_in;
  for (int i = 0; i < 3000; ++i) {
    Ipv4Address src(10, 1, static_cast<std::uint8_t>(rng() % 4), static_cast<std::uint8_t>(2 + rng() % 60));
    Ipv4Address dst = rng() % 2 ? Ipv4Address(198, 51, 100, 7) : Ipv4Address(8, 8, 8, 8);
    auto sp = static_cast<std::uint16_t>(1000 + rng() % 50);
    Packet p = make_packet(Protocol::Udp, src, sp, dst, 53, 10);
    Time now = i * kMillisecond;
    auto o = std::get<Packet>(fw.masquerade_out(p, now));
    EXPECT_EQ(o.src_ip, dst == Ipv4Address(198, 51, 100, 7) ? ip("203.0.113.1") : ip("192.0.2.1"));
    auto [it, fresh] = out_to_in.emplace(std::make_pair(o.src_ip.value, o.src_port), std::make_pair(src.value, sp));
    if (!fresh) { EXPECT_EQ(it->second, std::make_pair(src.value, sp)); }
    auto back = std::get<Packet>(fw.masquerade_in(make_packet(Protocol::Udp, dst, 53, o.src_ip, o.src_port, 10), now));
    EXPECT_EQ(back.dst_ip, src);
    EXPECT_EQ(back.dst_port, sp);
    if (i % 500 == 0) { EXPECT_TRUE(fw.nat_bijective()); }
  }
}

TEST(Sweep, StrictBoundary) {
  Firewall fw = single_scope();
  fw.masquerade_out(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 0);
  fw.sweep_expired(600 * kSecond);
  EXPECT_EQ(fw.nat_size(), 1u);
  fw.sweep_expired(601 * kSecond);
  EXPECT_EQ(fw.nat_size(), 0u);
  fw.sweep_expired(700 * kSecond);
  EXPECT_EQ(fw.nat_size(), 0u);
  // freed port is reused
  EXPECT_EQ(std::get<Packet>(fw.masquerade_out(tcp("10.1.1.6", 1, "192.0.2.9", 80), 702 * kSecond)).src_port, 1024);
}

namespace {

// Offers `rate` bps of 1500-byte packets for `dur`, shaping every ms. Returns released IP bytes.
std::uint64_t offer(Firewall& fw, std::uint64_t rate, Time dur) {
  const Time tick = kMillisecond;
  double credit = 0;
  std::uint64_t released = 0;
  for (Time t = 0; t < dur; t += tick) {
    credit += static_cast<double>(rate) * static_cast<double>(tick) / 1e6 / 8;
    while (credit >= 1500) {
      credit -= 1500;
      fw.enqueue({make_packet(Protocol::Udp, ip("10.1.1.5"), 1, ip("192.0.2.9"), 9, 1472), t, 1});
    }
    for (auto& q : fw.shape(t, tick)) released += q.packet.network_bytes();
  }
  return released;
}

}  // namespace

TEST(Shaper, CapsGigabitOffer) {
  FirewallConfig cfg;
  cfg.queue_limit = 256;
  Firewall fw(cfg);
  auto bytes = offer(fw, 1'000'000'000, 10 * kSecond);
  EXPECT_NEAR(static_cast<double>(bytes), 212.5e6, 212.5e6 * 0.02);
  EXPECT_GT(fw.drops(DropReason::QueueFull), 0u);
}

TEST(Shaper, UnderCapPassesEverything) {
  Firewall fw;
  auto bytes = offer(fw, 100'000'000, 2 * kSecond);
  EXPECT_EQ(bytes, 2 * 100'000'000 / 8 / 1500 * 1500);
  EXPECT_EQ(fw.queue_size(), 0u);
  EXPECT_EQ(fw.drops(DropReason::QueueFull), 0u);
}

TEST(Shaper, IdleReleasesNothing) {
  Firewall fw;
  EXPECT_TRUE(fw.shape(0, kMillisecond).empty());
  EXPECT_ERRC(fw.shape(0, 0), Errc::InvalidArgument);
}

TEST(Shaper, NeverExceedsCapOverAnyWindow) {
  std::mt19937_64 rng(12);
  Firewall fw;
  std::vector<std::uint64_t> per_ms;
  for (Time t = 0; t < 2 * kSecond; t += kMillisecond) {
    int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i)
      fw.enqueue({make_packet(Protocol::Udp, ip("10.1.1.5"), 1, ip("192.0.2.9"), 9, static_cast<std::uint32_t>(rng() % 1473)), t, 1});
    std::uint64_t b = 0;
    for (auto& q : fw.shape(t, kMillisecond)) b += q.packet.network_bytes();
    per_ms.push_back(b);
  }
  // 10 ms windows: cap x 10 ms plus one interval of carried budget
  const std::uint64_t bound = 170'000'000ULL * 11 / 1000 / 8;
  for (std::size_t i = 0; i + 10 <= per_ms.size(); ++i) {
    std::uint64_t s = 0;
    for (std::size_t j = i; j < i + 10; ++j) s += per_ms[j];
    EXPECT_LE(s, bound);
  }
}

TEST(FirewallForwardTest, PolicyAndMasquerade) {
  Firewall fw = single_scope();
  fw.add_route(net("10.0.0.0/8"), ip("10.1.1.254"));
  auto out = std::get<FirewallForward>(fw.forward(tcp("10.1.1.5", 4000, "192.0.2.9", 80), 1, 0));
  EXPECT_EQ(out.egress_iface, 2);
  EXPECT_EQ(out.packet.src_ip, ip("203.0.113.1"));
  auto back = std::get<FirewallForward>(fw.forward(tcp("192.0.2.9", 80, "203.0.113.1", 1024), 2, 1));
  EXPECT_EQ(back.egress_iface, 1);
  EXPECT_EQ(back.packet.dst_ip, ip("10.1.1.5"));
  auto unsolicited = fw.forward(tcp("192.0.2.9", 80, "10.1.1.5", 22), 2, 2);
  EXPECT_EQ(std::get<Dropped>(unsolicited).reason, DropReason::Acl);
}
