#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prsim/error.hpp"
#include "prsim/mac.hpp"

namespace prsim {

using Bytes = std::vector<std::uint8_t>;

namespace ie_tag {
inline constexpr std::uint8_t kSsid = 0;
inline constexpr std::uint8_t kSupportedRates = 1;
inline constexpr std::uint8_t kHtCapabilities = 45;
inline constexpr std::uint8_t kExtSupportedRates = 50;
inline constexpr std::uint8_t kExtCapabilities = 127;
inline constexpr std::uint8_t kVhtCapabilities = 191;
inline constexpr std::uint8_t kVendorSpecific = 221;
}  // namespace ie_tag

struct InformationElement {
  std::uint8_t tag = 0;
  Bytes value;

  bool operator==(const InformationElement&) const = default;
};

/// Hex string ("98abcdef") to bytes. Throws ConfigError on odd length or a
/// non-hex digit.
Bytes parse_hex(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Capability fields a device advertises in every probe request.
struct RadioCapabilities {
  std::vector<double> supported_rates_mbps;
  std::vector<double> ext_rates_mbps;
  Bytes ht_cap;
  Bytes vht_cap;
  Bytes ext_cap;
  std::vector<InformationElement> vendor_ies;

  /// Throws ConfigError: more than 8 basic rates, a rate that is not a
  /// multiple of 0.5 Mb/s, or an element longer than 255 bytes.
  void validate() const;

  bool operator==(const RadioCapabilities&) const = default;
};

/// 802.11 probe request plus the radio metadata the sniffer records with it.
struct ProbeRequestFrame {
  std::uint16_t seq_num = 0;  // 12 bits
  MacAddress src;
  MacAddress dst = MacAddress::broadcast();
  MacAddress bssid = MacAddress::broadcast();
  Bytes ssid;                            // empty = wildcard
  std::vector<InformationElement> ies;   // everything after the SSID element
  int rss_dbm = 0;
  std::uint16_t channel_mhz = 2437;
  std::int64_t timestamp_us = 0;  // not serialized; carried by the pcap record

  double timestamp_s() const { return static_cast<double>(timestamp_us) * 1e-6; }
  bool wildcard() const { return ssid.empty(); }

  bool operator==(const ProbeRequestFrame&) const = default;
};

/// Supported-rates element encoding: Mb/s to 500 kb/s units.
Bytes encode_rates(std::span<const double> rates_mbps);

/// IE order: SSID, Supported Rates, Extended Supported Rates, HT
/// Capabilities, Extended Capabilities, VHT Capabilities, vendor elements.
/// Empty capability fields are left out.
ProbeRequestFrame build_probe_request(const RadioCapabilities& caps,
                                      const MacAddress& mac, std::uint16_t seq,
                                      std::span<const std::uint8_t> ssid,
                                      int rss_dbm, std::int64_t timestamp_us);

inline constexpr std::size_t kMacHeaderLen = 24;
inline constexpr std::size_t kRadiotapLen = 15;

/// 24-byte management header followed by the tagged elements. No FCS.
Bytes serialize_frame(const ProbeRequestFrame& frame);

/// Radiotap header (Flags, Channel, dBm antenna signal) followed by
/// serialize_frame().
Bytes encode_capture(const ProbeRequestFrame& frame);

/// Thrown by the parsers for a well-formed 802.11 frame that is not a probe
/// request, so trace readers can skip it.
class NotProbeRequest : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Inverse of encode_capture(). Accepts any radiotap header: the dBm antenna
/// signal and channel are read when present, other fields are skipped, and a
/// trailing FCS is dropped when the Flags field announces one.
ProbeRequestFrame parse_frame(std::span<const std::uint8_t> bytes,
                              std::int64_t timestamp_us = 0);

/// Inverse of serialize_frame(); radio fields are left at their defaults.
ProbeRequestFrame parse_mac_frame(std::span<const std::uint8_t> bytes);

}  // namespace prsim
