#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "netfab/common.hpp"
#include "netfab/ipv4.hpp"

namespace netfab {

struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  static constexpr MacAddress from_u64(std::uint64_t v) {
    MacAddress m;
    for (int i = 5; i >= 0; --i) {
      m.octets[i] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
    return m;
  }

  constexpr std::uint64_t to_u64() const {
    std::uint64_t v = 0;
    for (auto o : octets) v = (v << 8) | o;
    return v;
  }

  constexpr bool is_broadcast() const { return to_u64() == 0xffffffffffffULL; }
  constexpr bool is_multicast() const { return (octets[0] & 0x01) != 0; }

  static std::optional<MacAddress> try_parse(std::string_view s) {
    if (s.size() != 17) return std::nullopt;
    MacAddress m;
    for (int i = 0; i < 6; ++i) {
      if (i < 5 && s[i * 3 + 2] != ':') return std::nullopt;
      unsigned v = 0;
      for (int j = 0; j < 2; ++j) {
        char c = s[i * 3 + j];
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
        else return std::nullopt;
      }
      m.octets[i] = static_cast<std::uint8_t>(v);
    }
    return m;
  }

  static MacAddress parse(std::string_view s) {
    auto m = try_parse(s);
    if (!m) throw Error(Errc::InvalidAddress, "bad MAC address '" + std::string(s) + "'");
    return *m;
  }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 6; ++i) {
      if (i) s += ':';
      s += kHex[octets[i] >> 4];
      s += kHex[octets[i] & 0xf];
    }
    return s;
  }

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

// 802.1Q VLAN identifier. 0 and 4095 are reserved.
class VlanId {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 4094;

  static constexpr bool valid(long long v) { return v >= kMin && v <= kMax; }

  explicit VlanId(long long v) : vid_(static_cast<std::uint16_t>(v)) {
    if (!valid(v)) throw Error(Errc::InvalidVid, "vid " + std::to_string(v) + " outside [1,4094]");
  }

  constexpr std::uint16_t value() const { return vid_; }

  friend constexpr auto operator<=>(VlanId, VlanId) = default;

 private:
  std::uint16_t vid_;
};

struct VlanTag {
  static constexpr std::uint16_t kTpid = 0x8100;

  std::uint16_t tpid = kTpid;
  std::uint8_t pcp = 0;
  VlanId vid{1};

  friend auto operator<=>(const VlanTag&, const VlanTag&) = default;
};

enum class Protocol : std::uint8_t { Tcp, Udp, Icmp, Probe, Arp };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::Tcp: return "tcp";
    case Protocol::Udp: return "udp";
    case Protocol::Icmp: return "icmp";
    case Protocol::Probe: return "probe";
    case Protocol::Arp: return "arp";
  }
  return "?";
}

constexpr bool has_ports(Protocol p) { return p == Protocol::Tcp || p == Protocol::Udp; }

// Request/reply role for ARP, ICMP echo and path probes.
enum class PacketOp : std::uint8_t { None, Request, Reply };

struct Packet {
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  Protocol protocol = Protocol::Udp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t payload_bytes = 0;
  std::uint8_t ttl = 64;
  PacketOp op = PacketOp::None;
  // ICMP echo identifier / probe sequence number.
  std::uint16_t ident = 0;

  // Simulation bookkeeping; not part of any header.
  std::uint64_t uid = 0;
  std::int32_t flow_tag = -1;

  // Bytes at the network layer (the ARP body for ARP).
  std::uint32_t network_bytes() const {
    switch (protocol) {
      case Protocol::Tcp: return 40 + payload_bytes;
      case Protocol::Udp:
      case Protocol::Icmp:
      case Protocol::Probe: return 28 + payload_bytes;
      case Protocol::Arp: return 28;
    }
    return 0;
  }

  friend bool operator==(const Packet&, const Packet&) = default;
};

inline void validate(const Packet& p) {
  if (!has_ports(p.protocol) && (p.src_port != 0 || p.dst_port != 0))
    throw Error(Errc::InvalidPacket, std::string(to_string(p.protocol)) + " packet carries ports");
}

inline Packet make_packet(Protocol proto, Ipv4Address src, std::uint16_t sport, Ipv4Address dst,
                          std::uint16_t dport, std::uint32_t payload = 0) {
  Packet p;
  p.protocol = proto;
  p.src_ip = src;
  p.dst_ip = dst;
  if (has_ports(proto)) {
    p.src_port = sport;
    p.dst_port = dport;
  }
  p.payload_bytes = payload;
  return p;
}

struct Frame {
  static constexpr std::uint32_t kMinSize = 64;
  static constexpr std::uint32_t kMaxUntagged = 1518;
  static constexpr std::uint32_t kMaxTagged = 1522;
  // Ethernet header plus FCS.
  static constexpr std::uint32_t kOverhead = 18;

  MacAddress src;
  MacAddress dst;
  std::optional<VlanTag> tag;
  std::optional<Packet> packet;
  std::uint32_t size_bytes = kMinSize;

  static Frame carrying(MacAddress src, MacAddress dst, Packet p) {
    std::uint32_t size = std::max(kMinSize, kOverhead + p.network_bytes());
    if (size > kMaxUntagged)
      throw Error(Errc::InvalidFrame, "packet of " + std::to_string(p.network_bytes()) +
                                          " bytes does not fit an Ethernet frame");
    return Frame{src, dst, std::nullopt, std::move(p), size};
  }

  static Frame raw(MacAddress src, MacAddress dst, std::uint32_t size) {
    Frame f{src, dst, std::nullopt, std::nullopt, size};
    f.check();
    return f;
  }

  // Size bounds: untagged [64,1518], tagged [68,1522].
  void check() const {
    std::uint32_t extra = tag ? 4 : 0;
    if (size_bytes < kMinSize + extra || size_bytes > kMaxUntagged + extra)
      throw Error(Errc::InvalidFrame, "frame size " + std::to_string(size_bytes) + " out of bounds");
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline Frame push_tag(Frame frame, VlanId vid, int pcp = 0) {
  if (frame.tag) throw Error(Errc::AlreadyTagged, "frame already carries a tag");
  if (pcp < 0 || pcp > 7) throw Error(Errc::InvalidArgument, "pcp outside [0,7]");
  frame.tag = VlanTag{VlanTag::kTpid, static_cast<std::uint8_t>(pcp), vid};
  frame.size_bytes += 4;
  return frame;
}

inline Frame push_tag(Frame frame, long long vid, int pcp = 0) {
  if (frame.tag) throw Error(Errc::AlreadyTagged, "frame already carries a tag");
  return push_tag(std::move(frame), VlanId(vid), pcp);
}

inline std::pair<Frame, VlanId> pop_tag(Frame frame) {
  if (!frame.tag) throw Error(Errc::NotTagged, "frame carries no tag");
  VlanId vid = frame.tag->vid;
  frame.tag.reset();
  frame.size_bytes -= 4;
  return {std::move(frame), vid};
}

enum class DstClass { Unicast, Broadcast, Multicast };

inline DstClass classify_dst(const MacAddress& dst) {
  if (dst.is_broadcast()) return DstClass::Broadcast;
  if (dst.is_multicast()) return DstClass::Multicast;
  return DstClass::Unicast;
}

inline DstClass classify_dst(const Frame& frame) { return classify_dst(frame.dst); }

struct FlowKey {
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  Protocol protocol = Protocol::Udp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;

  FlowKey reversed() const { return {dst_ip, src_ip, protocol, dst_port, src_port}; }

  friend constexpr auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

inline FlowKey flow_key(const Packet& p) {
  if (has_ports(p.protocol)) return {p.src_ip, p.dst_ip, p.protocol, p.src_port, p.dst_port};
  return {p.src_ip, p.dst_ip, p.protocol, 0, 0};
}

// Key for frames that carry no packet: MAC addresses folded into the tuple.
inline FlowKey frame_key(const Frame& f) {
  if (f.packet) return flow_key(*f.packet);
  std::uint64_t s = f.src.to_u64();
  std::uint64_t d = f.dst.to_u64();
  return {Ipv4Address(static_cast<std::uint32_t>(s)), Ipv4Address(static_cast<std::uint32_t>(d)),
          Protocol::Arp, static_cast<std::uint16_t>(s >> 32), static_cast<std::uint16_t>(d >> 32)};
}

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the 5-tuple, finalized with a splitmix64 round.
inline std::uint64_t flow_digest(const FlowKey& k, std::uint64_t salt = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  auto feed = [&h](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(k.src_ip.value, 4);
  feed(k.dst_ip.value, 4);
  feed(static_cast<std::uint8_t>(k.protocol), 1);
  feed(k.src_port, 2);
  feed(k.dst_port, 2);
  return mix64(h);
}

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept {
    return static_cast<std::size_t>(flow_digest(k));
  }
};

}  // namespace netfab
