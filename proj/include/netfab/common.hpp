#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netfab {

// Simulation time in integer microseconds.
using Time = std::int64_t;

constexpr Time kMicrosecond = 1;
constexpr Time kMillisecond = 1'000;
constexpr Time kSecond = 1'000'000;

enum class Errc {
  AlreadyTagged,
  NotTagged,
  InvalidVid,
  InvalidFrame,
  InvalidPacket,
  InvalidAddress,
  UnknownPort,
  LinkDown,
  NoLiveMember,
  DuplicateVid,
  OverlappingSubnet,
  DuplicateRoute,
  InvalidRoute,
  UnknownInterface,
  CapacityExceeded,
  UnknownPath,
  UnknownTarget,
  UnknownNode,
  UnknownInvariant,
  InvalidArgument,
  Parse,
  Validation,
  Loop,
};

inline const char* to_string(Errc e) {
  switch (e) {
    case Errc::AlreadyTagged: return "AlreadyTagged";
    case Errc::NotTagged: return "NotTagged";
    case Errc::InvalidVid: return "InvalidVid";
    case Errc::InvalidFrame: return "InvalidFrame";
    case Errc::InvalidPacket: return "InvalidPacket";
    case Errc::InvalidAddress: return "InvalidAddress";
    case Errc::UnknownPort: return "UnknownPort";
    case Errc::LinkDown: return "LinkDown";
    case Errc::NoLiveMember: return "NoLiveMember";
    case Errc::DuplicateVid: return "DuplicateVid";
    case Errc::OverlappingSubnet: return "OverlappingSubnet";
    case Errc::DuplicateRoute: return "DuplicateRoute";
    case Errc::InvalidRoute: return "InvalidRoute";
    case Errc::UnknownInterface: return "UnknownInterface";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::UnknownPath: return "UnknownPath";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownInvariant: return "UnknownInvariant";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Parse: return "ParseError";
    case Errc::Validation: return "ValidationError";
    case Errc::Loop: return "LoopError";
  }
  return "?";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Why a packet (or frame) stopped short of its destination.
enum class DropReason {
  NoRoute,
  Acl,
  Ttl,
  NoBinding,
  NoScope,
  PoolExhausted,
  QueueFull,
  LinkDown,
  NodeDown,
  VlanFilter,
  ArpTimeout,
  Unavailable,
  Undeliverable,
};

constexpr int kDropReasonCount = 13;

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::NoRoute: return "no-route";
    case DropReason::Acl: return "acl";
    case DropReason::Ttl: return "ttl";
    case DropReason::NoBinding: return "no-binding";
    case DropReason::NoScope: return "no-scope";
    case DropReason::PoolExhausted: return "pool-exhausted";
    case DropReason::QueueFull: return "queue-full";
    case DropReason::LinkDown: return "link-down";
    case DropReason::NodeDown: return "node-down";
    case DropReason::VlanFilter: return "vlan-filter";
    case DropReason::ArpTimeout: return "arp-timeout";
    case DropReason::Unavailable: return "unavailable";
    case DropReason::Undeliverable: return "undeliverable";
  }
  return "?";
}

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_int(std::string_view s, long long& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// "10M", "1G", "34.13M", "170000000" -> value in base units (decimal SI).
inline bool parse_si(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  double mult = 1.0;
  switch (s.back()) {
    case 'k': case 'K': mult = 1e3; s.remove_suffix(1); break;
    case 'M': mult = 1e6; s.remove_suffix(1); break;
    case 'G': mult = 1e9; s.remove_suffix(1); break;
    case 'T': mult = 1e12; s.remove_suffix(1); break;
    default: break;
  }
  double v = 0;
  if (!parse_double(s, v) || v < 0) return false;
  out = static_cast<std::uint64_t>(std::llround(v * mult));
  return true;
}

// Decimal seconds -> microseconds.
inline bool parse_seconds(std::string_view s, Time& out) {
  double v = 0;
  if (!parse_double(s, v)) return false;
  out = static_cast<Time>(std::llround(v * 1e6));
  return true;
}

// Microseconds -> shortest decimal-seconds string that parses back exactly.
inline std::string format_seconds(Time t) {
  std::string sign = t < 0 ? "-" : "";
  if (t < 0) t = -t;
  std::string s = std::to_string(t / kSecond);
  Time frac = t % kSecond;
  if (frac != 0) {
    std::string f = std::to_string(frac);
    f.insert(0, 6 - f.size(), '0');
    while (!f.empty() && f.back() == '0') f.pop_back();
    s += "." + f;
  }
  return sign + s;
}

inline std::string format_si(std::uint64_t v) {
  if (v != 0 && v % 1'000'000'000 == 0) return std::to_string(v / 1'000'000'000) + "G";
  if (v != 0 && v % 1'000'000 == 0) return std::to_string(v / 1'000'000) + "M";
  if (v != 0 && v % 1'000 == 0) return std::to_string(v / 1'000) + "k";
  return std::to_string(v);
}

}  // namespace detail
}  // namespace netfab
