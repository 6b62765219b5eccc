#include "prsim/mac.hpp"

#include <cstdio>

#include "prsim/error.hpp"

namespace prsim {
namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <std::size_t N>
std::array<std::uint8_t, N> parse_octets(std::string_view text,
                                         std::string_view what) {
  std::array<std::uint8_t, N> out{};
  constexpr std::size_t expected_len = N * 3 - 1;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t pos = i * 3;
    for (std::size_t k = 0; k < 2; ++k) {
      if (pos + k >= text.size()) {
        throw ParseError(std::string(what) + ": unexpected end of input",
                         pos + k);
      }
      if (hex_value(text[pos + k]) < 0) {
        throw ParseError(std::string(what) + ": expected hex digit",
                         pos + k);
      }
    }
    out[i] = static_cast<std::uint8_t>(hex_value(text[pos]) * 16 +
                                       hex_value(text[pos + 1]));
    if (i + 1 < N) {
      if (pos + 2 >= text.size()) {
        throw ParseError(std::string(what) + ": unexpected end of input",
                         pos + 2);
      }
      if (text[pos + 2] != ':') {
        throw ParseError(std::string(what) + ": expected ':'", pos + 2);
      }
    }
  }
  if (text.size() != expected_len) {
    throw ParseError(std::string(what) + ": trailing characters",
                     expected_len);
  }
  return out;
}

}  // namespace

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0],
                octets[1], octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

std::uint64_t MacAddress::to_u64() const {
  std::uint64_t v = 0;
  for (auto o : octets) v = (v << 8) | o;
  return v;
}

MacAddress parse_mac(std::string_view text) {
  return MacAddress{parse_octets<6>(text, "mac address")};
}

Oui parse_oui(std::string_view text) { return parse_octets<3>(text, "oui"); }

std::string oui_to_string(const Oui& oui) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x", oui[0], oui[1], oui[2]);
  return buf;
}

std::string_view to_string(MacPolicyKind kind) {
  switch (kind) {
    case MacPolicyKind::FullPerScan:
      return "full_per_scan";
    case MacPolicyKind::OuiPreserving:
      return "oui_preserving";
    case MacPolicyKind::Periodic:
      return "periodic";
    case MacPolicyKind::None:
      return "none";
  }
  return "unknown";
}

MacPolicyKind parse_policy_kind(std::string_view text) {
  if (text == "full_per_scan") return MacPolicyKind::FullPerScan;
  if (text == "oui_preserving") return MacPolicyKind::OuiPreserving;
  if (text == "periodic") return MacPolicyKind::Periodic;
  if (text == "none") return MacPolicyKind::None;
  throw ConfigError("unknown mac policy '" + std::string(text) + "'");
}

void MacPolicy::validate() const {
  if (kind == MacPolicyKind::Periodic && !(period_s > 0.0)) {
    throw ConfigError("periodic mac policy requires period_s > 0");
  }
  if (kind == MacPolicyKind::OuiPreserving &&
      (base_oui[0] & MacAddress::kMulticastBit) != 0) {
    throw ConfigError("oui_preserving base oui " + oui_to_string(base_oui) +
                      " has the multicast bit set");
  }
}

MacAddress random_local_mac(Rng& rng) {
  const std::uint64_t bits = rng.next_u64();
  MacAddress m;
  for (std::size_t i = 0; i < 6; ++i) {
    m.octets[i] = static_cast<std::uint8_t>(bits >> (8 * (5 - i)));
  }
  m.octets[0] = static_cast<std::uint8_t>(
      (m.octets[0] & ~MacAddress::kMulticastBit) | MacAddress::kLocalBit);
  return m;
}

namespace {

MacAddress fresh_address(const MacPolicy& policy, Rng& rng) {
  MacAddress m = random_local_mac(rng);
  if (policy.kind == MacPolicyKind::OuiPreserving) {
    m.octets[0] = policy.base_oui[0];
    m.octets[1] = policy.base_oui[1];
    m.octets[2] = policy.base_oui[2];
  }
  return m;
}

}  // namespace

MacState initial_mac_state(const MacPolicy& policy, const MacAddress& hardware,
                           Rng& rng) {
  MacState state;
  state.current = policy.kind == MacPolicyKind::None
                      ? hardware
                      : fresh_address(policy, rng);
  return state;
}

MacAddress next_mac(const MacPolicy& policy, MacState& state, double now,
                    bool scan_boundary, Rng& rng) {
  if (!scan_boundary) return state.current;

  bool rotate = false;
  switch (policy.kind) {
    case MacPolicyKind::FullPerScan:
    case MacPolicyKind::OuiPreserving:
      rotate = true;
      break;
    case MacPolicyKind::Periodic:
      rotate = now - state.last_change_time >= policy.period_s;
      break;
    case MacPolicyKind::None:
      break;
  }
  if (!rotate) return state.current;

  const MacAddress next = fresh_address(policy, rng);
  if (next != state.current) ++state.change_count;
  state.current = next;
  state.last_change_time = now;
  return next;
}

bool mac_compliant(const MacAddress& addr, const MacPolicy& policy) {
  if (addr.multicast_bit()) return false;
  switch (policy.kind) {
    case MacPolicyKind::OuiPreserving:
      return addr.oui() == policy.base_oui;
    case MacPolicyKind::None:
      return true;
    default:
      return addr.local_bit();
  }
}

}  // namespace prsim
