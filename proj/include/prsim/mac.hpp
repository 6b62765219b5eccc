#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "prsim/random.hpp"

namespace prsim {

using Oui = std::array<std::uint8_t, 3>;

/// 48-bit IEEE MAC address.
struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr std::uint8_t kMulticastBit = 0x01;
  static constexpr std::uint8_t kLocalBit = 0x02;

  static MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  Oui oui() const { return {octets[0], octets[1], octets[2]}; }
  std::array<std::uint8_t, 3> nic() const {
    return {octets[3], octets[4], octets[5]};
  }
  bool local_bit() const { return (octets[0] & kLocalBit) != 0; }
  bool multicast_bit() const { return (octets[0] & kMulticastBit) != 0; }
  bool is_broadcast() const { return *this == broadcast(); }

  /// Canonical lowercase `xx:xx:xx:xx:xx:xx`.
  std::string to_string() const;

  std::uint64_t to_u64() const;

  auto operator<=>(const MacAddress&) const = default;
};

/// Parses `xx:xx:xx:xx:xx:xx` (either case). Throws ParseError naming the
/// first offending character position.
MacAddress parse_mac(std::string_view text);

/// Parses a three-octet `xx:xx:xx` OUI.
Oui parse_oui(std::string_view text);
std::string oui_to_string(const Oui& oui);

enum class MacPolicyKind {
  FullPerScan,
  OuiPreserving,
  Periodic,
  /// Emits the hardware address unchanged. Off unless configured.
  None,
};

std::string_view to_string(MacPolicyKind kind);
MacPolicyKind parse_policy_kind(std::string_view text);

struct MacPolicy {
  MacPolicyKind kind = MacPolicyKind::FullPerScan;
  double period_s = 0.0;  // Periodic only
  Oui base_oui{};         // OuiPreserving only

  static MacPolicy full_per_scan() { return {}; }
  static MacPolicy oui_preserving(const Oui& oui) {
    return {MacPolicyKind::OuiPreserving, 0.0, oui};
  }
  static MacPolicy periodic(double period_s) {
    return {MacPolicyKind::Periodic, period_s, {}};
  }
  static MacPolicy none() { return {MacPolicyKind::None, 0.0, {}}; }

  /// Throws ConfigError when Periodic has a non-positive period.
  void validate() const;

  bool operator==(const MacPolicy&) const = default;
};

struct MacState {
  MacAddress current;
  double last_change_time = 0.0;
  std::uint64_t change_count = 0;
};

/// Fresh unicast, locally administered address: 46 uniform free bits.
MacAddress random_local_mac(Rng& rng);

/// State at scenario start. Randomizing policies begin with an address that
/// has not been on air yet; None starts (and stays) on `hardware`.
MacState initial_mac_state(const MacPolicy& policy, const MacAddress& hardware,
                           Rng& rng);

/// Address for a frame sent at `now`. Randomization only happens when
/// `scan_boundary` is set, i.e. on the first frame of a burst, so every frame of
/// one burst shares an address. Updates `state` in place.
MacAddress next_mac(const MacPolicy& policy, MacState& state, double now,
                    bool scan_boundary, Rng& rng);

/// Unicast, plus locally administered for the fully random policies, or the
/// configured OUI for OuiPreserving. None only requires unicast.
bool mac_compliant(const MacAddress& addr, const MacPolicy& policy);

}  // namespace prsim

template <>
struct std::hash<prsim::MacAddress> {
  std::size_t operator()(const prsim::MacAddress& m) const noexcept {
    return std::hash<std::uint64_t>{}(m.to_u64());
  }
};
