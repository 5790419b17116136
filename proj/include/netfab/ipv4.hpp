#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "netfab/common.hpp"

namespace netfab {

struct Ipv4Address {
  std::uint32_t value = 0;

  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t v) : value(v) {}
  constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
              (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  static std::optional<Ipv4Address> try_parse(std::string_view s) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      auto dot = s.find('.');
      std::string_view part = i < 3 ? s.substr(0, dot) : s;
      if ((i < 3 && dot == std::string_view::npos) || part.empty() || part.size() > 3)
        return std::nullopt;
      long long octet = 0;
      if (!detail::parse_int(part, octet) || octet < 0 || octet > 255) return std::nullopt;
      v = (v << 8) | static_cast<std::uint32_t>(octet);
      if (i < 3) s.remove_prefix(dot + 1);
    }
    return Ipv4Address(v);
  }

  static Ipv4Address parse(std::string_view s) {
    auto a = try_parse(s);
    if (!a) throw Error(Errc::InvalidAddress, "bad IPv4 address '" + std::string(s) + "'");
    return *a;
  }

  std::string to_string() const {
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
           std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
  }

  friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;
};

constexpr std::uint32_t prefix_mask(int prefix_len) {
  return prefix_len <= 0 ? 0u : (prefix_len >= 32 ? 0xffffffffu : ~((1u << (32 - prefix_len)) - 1));
}

// A network prefix; host bits of `base` are always zero.
struct Ipv4Network {
  Ipv4Address base;
  int prefix_len = 0;

  constexpr Ipv4Network() = default;
  Ipv4Network(Ipv4Address addr, int len) : base(addr.value & prefix_mask(len)), prefix_len(len) {
    if (len < 0 || len > 32) throw Error(Errc::InvalidAddress, "prefix length out of range");
  }

  static Ipv4Network parse(std::string_view s) {
    auto slash = s.find('/');
    if (slash == std::string_view::npos) return Ipv4Network(Ipv4Address::parse(s), 32);
    long long len = 0;
    if (!detail::parse_int(s.substr(slash + 1), len) || len < 0 || len > 32)
      throw Error(Errc::InvalidAddress, "bad prefix '" + std::string(s) + "'");
    return Ipv4Network(Ipv4Address::parse(s.substr(0, slash)), static_cast<int>(len));
  }

  std::uint32_t mask() const { return prefix_mask(prefix_len); }
  bool contains(Ipv4Address a) const { return (a.value & mask()) == base.value; }
  bool overlaps(const Ipv4Network& o) const {
    int shorter = std::min(prefix_len, o.prefix_len);
    return (base.value & prefix_mask(shorter)) == (o.base.value & prefix_mask(shorter));
  }
  std::string to_string() const { return base.to_string() + "/" + std::to_string(prefix_len); }

  friend auto operator<=>(const Ipv4Network&, const Ipv4Network&) = default;
};

// An address assigned to an interface, together with its on-link prefix.
struct InterfaceAddress {
  Ipv4Address ip;
  int prefix_len = 32;

  Ipv4Network network() const { return Ipv4Network(ip, prefix_len); }

  static InterfaceAddress parse(std::string_view s) {
    auto slash = s.find('/');
    if (slash == std::string_view::npos)
      throw Error(Errc::InvalidAddress, "interface address needs a prefix: '" + std::string(s) + "'");
    long long len = 0;
    if (!detail::parse_int(s.substr(slash + 1), len) || len < 0 || len > 32)
      throw Error(Errc::InvalidAddress, "bad prefix '" + std::string(s) + "'");
    return {Ipv4Address::parse(s.substr(0, slash)), static_cast<int>(len)};
  }
  std::string to_string() const { return ip.to_string() + "/" + std::to_string(prefix_len); }

  friend auto operator<=>(const InterfaceAddress&, const InterfaceAddress&) = default;
};

// Longest-prefix-match table keyed by network. One bucket per prefix length,
// so the lookup result does not depend on insertion order.
template <typename Value>
class PrefixTable {
 public:
  // Returns false if the prefix is already present.
  bool insert(const Ipv4Network& net, Value v) {
    return buckets_[net.prefix_len].emplace(net.base.value, std::move(v)).second;
  }

  bool erase(const Ipv4Network& net) { return buckets_[net.prefix_len].erase(net.base.value) > 0; }

  const Value* find_exact(const Ipv4Network& net) const {
    auto& b = buckets_[net.prefix_len];
    auto it = b.find(net.base.value);
    return it == b.end() ? nullptr : &it->second;
  }

  // Longest prefix containing `a`, with its network.
  std::optional<std::pair<Ipv4Network, const Value*>> lookup(Ipv4Address a) const {
    for (int len = 32; len >= 0; --len) {
      const auto& b = buckets_[len];
      if (b.empty()) continue;
      auto it = b.find(a.value & prefix_mask(len));
      if (it != b.end()) return std::make_pair(Ipv4Network(Ipv4Address(it->first), len), &it->second);
    }
    return std::nullopt;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : buckets_) n += b.size();
    return n;
  }

  // Entries ordered by (prefix length, base) ascending.
  std::vector<std::pair<Ipv4Network, Value>> entries() const {
    std::vector<std::pair<Ipv4Network, Value>> out;
    for (int len = 0; len <= 32; ++len) {
      std::map<std::uint32_t, const Value*> sorted;
      for (const auto& [k, v] : buckets_[len]) sorted.emplace(k, &v);
      for (const auto& [k, v] : sorted) out.emplace_back(Ipv4Network(Ipv4Address(k), len), *v);
    }
    return out;
  }

 private:
  std::array<std::unordered_map<std::uint32_t, Value>, 33> buckets_;
};

}  // namespace netfab
