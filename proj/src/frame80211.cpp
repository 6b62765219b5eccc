#include "prsim/frame80211.hpp"

#include <cmath>

namespace prsim {
namespace {

constexpr std::uint8_t kFrameControlProbeRequest = 0x40;  // subtype 4, mgmt

// Radiotap present bits.
constexpr std::uint32_t kRtTsft = 1u << 0;
constexpr std::uint32_t kRtFlags = 1u << 1;
constexpr std::uint32_t kRtRate = 1u << 2;
constexpr std::uint32_t kRtChannel = 1u << 3;
constexpr std::uint32_t kRtFhss = 1u << 4;
constexpr std::uint32_t kRtDbmAntSignal = 1u << 5;
constexpr std::uint32_t kRtExt = 1u << 31;
constexpr std::uint8_t kRtFlagFcs = 0x10;

constexpr std::uint16_t kChan2GHz = 0x0080;
constexpr std::uint16_t kChan5GHz = 0x0100;
constexpr std::uint16_t kChanCck = 0x0020;
constexpr std::uint16_t kChanOfdm = 0x0040;

void put_u16le(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_mac(Bytes& out, const MacAddress& m) {
  out.insert(out.end(), m.octets.begin(), m.octets.end());
}

void put_ie(Bytes& out, std::uint8_t tag, std::span<const std::uint8_t> value) {
  out.push_back(tag);
  out.push_back(static_cast<std::uint8_t>(value.size()));
  out.insert(out.end(), value.begin(), value.end());
}

std::uint16_t get_u16le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

MacAddress get_mac(std::span<const std::uint8_t> b, std::size_t at) {
  MacAddress m;
  for (std::size_t i = 0; i < 6; ++i) m.octets[i] = b[at + i];
  return m;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes parse_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw ConfigError("hex string '" + std::string(hex) +
                      "' has odd length " + std::to_string(hex.size()));
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_digit(hex[i]);
    const int lo = hex_digit(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw ConfigError("hex string '" + std::string(hex) +
                        "' has a non-hex digit near position " +
                        std::to_string(i));
    }
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

void RadioCapabilities::validate() const {
  if (supported_rates_mbps.size() > 8) {
    throw ConfigError("supported rates element holds at most 8 rates");
  }
  auto check_rates = [](const std::vector<double>& rates) {
    for (double r : rates) {
      const double units = r * 2.0;
      if (!(r > 0.0) || std::abs(units - std::round(units)) > 1e-9 ||
          units > 127.0) {
        throw ConfigError("rate " + std::to_string(r) +
                          " Mb/s is not encodable in 500 kb/s units");
      }
    }
  };
  check_rates(supported_rates_mbps);
  check_rates(ext_rates_mbps);
  if (ext_rates_mbps.size() > 255 || ht_cap.size() > 255 ||
      vht_cap.size() > 255 || ext_cap.size() > 255) {
    throw ConfigError("information element longer than 255 bytes");
  }
  for (const auto& ie : vendor_ies) {
    if (ie.value.size() > 255) {
      throw ConfigError("vendor element longer than 255 bytes");
    }
  }
}

Bytes encode_rates(std::span<const double> rates_mbps) {
  Bytes out;
  out.reserve(rates_mbps.size());
  for (double r : rates_mbps) {
    out.push_back(static_cast<std::uint8_t>(std::lround(r * 2.0)));
  }
  return out;
}

ProbeRequestFrame build_probe_request(const RadioCapabilities& caps,
                                      const MacAddress& mac, std::uint16_t seq,
                                      std::span<const std::uint8_t> ssid,
                                      int rss_dbm, std::int64_t timestamp_us) {
  ProbeRequestFrame f;
  f.seq_num = static_cast<std::uint16_t>(seq & 0x0fff);
  f.src = mac;
  f.ssid.assign(ssid.begin(), ssid.end());
  f.rss_dbm = rss_dbm;
  f.timestamp_us = timestamp_us;

  auto add = [&f](std::uint8_t tag, Bytes value) {
    if (!value.empty()) f.ies.push_back({tag, std::move(value)});
  };
  add(ie_tag::kSupportedRates, encode_rates(caps.supported_rates_mbps));
  add(ie_tag::kExtSupportedRates, encode_rates(caps.ext_rates_mbps));
  add(ie_tag::kHtCapabilities, caps.ht_cap);
  add(ie_tag::kExtCapabilities, caps.ext_cap);
  add(ie_tag::kVhtCapabilities, caps.vht_cap);
  for (const auto& ie : caps.vendor_ies) f.ies.push_back(ie);
  return f;
}

Bytes serialize_frame(const ProbeRequestFrame& frame) {
  Bytes out;
  std::size_t ie_len = 2 + frame.ssid.size();
  for (const auto& ie : frame.ies) ie_len += 2 + ie.value.size();
  out.reserve(kMacHeaderLen + ie_len);

  out.push_back(kFrameControlProbeRequest);
  out.push_back(0x00);  // frame control flags
  put_u16le(out, 0);    // duration
  put_mac(out, frame.dst);
  put_mac(out, frame.src);
  put_mac(out, frame.bssid);
  put_u16le(out, static_cast<std::uint16_t>((frame.seq_num & 0x0fff) << 4));

  put_ie(out, ie_tag::kSsid, frame.ssid);
  for (const auto& ie : frame.ies) put_ie(out, ie.tag, ie.value);
  return out;
}

Bytes encode_capture(const ProbeRequestFrame& frame) {
  Bytes out;
  out.reserve(kRadiotapLen + kMacHeaderLen + 64);
  out.push_back(0);  // version
  out.push_back(0);  // pad
  put_u16le(out, static_cast<std::uint16_t>(kRadiotapLen));
  const std::uint32_t present = kRtFlags | kRtChannel | kRtDbmAntSignal;
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(present >> (8 * i)));
  }
  out.push_back(0);  // flags: no FCS
  out.push_back(0);  // align channel to 2 bytes
  put_u16le(out, frame.channel_mhz);
  const std::uint16_t chan_flags = frame.channel_mhz < 3000
                                       ? (kChan2GHz | kChanCck)
                                       : (kChan5GHz | kChanOfdm);
  put_u16le(out, chan_flags);
  out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(frame.rss_dbm)));

  const Bytes mac_frame = serialize_frame(frame);
  out.insert(out.end(), mac_frame.begin(), mac_frame.end());
  return out;
}

ProbeRequestFrame parse_mac_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMacHeaderLen) {
    throw ParseError("truncated 802.11 header", bytes.size());
  }
  const std::uint8_t fc0 = bytes[0];
  const unsigned version = fc0 & 0x3;
  const unsigned type = (fc0 >> 2) & 0x3;
  const unsigned subtype = (fc0 >> 4) & 0xf;
  if (version != 0) throw ParseError("unsupported 802.11 protocol version", 0);
  if (type != 0 || subtype != 4) {
    throw NotProbeRequest("frame is not a probe request", 0);
  }

  ProbeRequestFrame f;
  f.dst = get_mac(bytes, 4);
  f.src = get_mac(bytes, 10);
  f.bssid = get_mac(bytes, 16);
  f.seq_num = static_cast<std::uint16_t>(get_u16le(bytes, 22) >> 4);

  std::size_t pos = kMacHeaderLen;
  bool first = true;
  while (pos < bytes.size()) {
    if (pos + 2 > bytes.size()) {
      throw ParseError("truncated information element header", pos);
    }
    const std::uint8_t tag = bytes[pos];
    const std::size_t len = bytes[pos + 1];
    if (pos + 2 + len > bytes.size()) {
      throw ParseError("information element length overruns frame", pos + 1);
    }
    auto value = bytes.subspan(pos + 2, len);
    if (first) {
      if (tag != ie_tag::kSsid) {
        throw ParseError("first information element is not an SSID", pos);
      }
      f.ssid.assign(value.begin(), value.end());
      first = false;
    } else {
      f.ies.push_back({tag, Bytes(value.begin(), value.end())});
    }
    pos += 2 + len;
  }
  if (first) throw ParseError("missing SSID element", pos);
  return f;
}

ProbeRequestFrame parse_frame(std::span<const std::uint8_t> bytes,
                              std::int64_t timestamp_us) {
  if (bytes.size() < 8) throw ParseError("truncated radiotap header", bytes.size());
  if (bytes[0] != 0) throw ParseError("unsupported radiotap version", 0);
  const std::size_t rt_len = get_u16le(bytes, 2);
  if (rt_len < 8 || rt_len > bytes.size()) {
    throw ParseError("radiotap length overruns packet", 2);
  }

  // Walk the present bitmaps, then the fields in bit order up to antenna
  // signal. Alignment is relative to the start of the radiotap header.
  std::size_t pos = 4;
  const std::uint32_t present = get_u32le(bytes, pos);
  std::uint32_t word = present;
  while (word & kRtExt) {
    pos += 4;
    if (pos + 4 > rt_len) throw ParseError("radiotap present bitmap overrun", pos);
    word = get_u32le(bytes, pos);
  }
  pos += 4;

  auto field = [&](std::size_t align, std::size_t size) {
    pos = (pos + align - 1) / align * align;
    if (pos + size > rt_len) throw ParseError("radiotap field overrun", pos);
    const std::size_t at = pos;
    pos += size;
    return at;
  };

  std::uint8_t flags = 0;
  std::uint16_t channel = 0;
  int rss = 0;
  if (present & kRtTsft) field(8, 8);
  if (present & kRtFlags) flags = bytes[field(1, 1)];
  if (present & kRtRate) field(1, 1);
  if (present & kRtChannel) channel = get_u16le(bytes, field(2, 4));
  if (present & kRtFhss) field(1, 2);
  if (present & kRtDbmAntSignal) {
    rss = static_cast<std::int8_t>(bytes[field(1, 1)]);
  }

  auto mac_frame = bytes.subspan(rt_len);
  if (flags & kRtFlagFcs) {
    if (mac_frame.size() < 4) throw ParseError("truncated FCS", bytes.size());
    mac_frame = mac_frame.first(mac_frame.size() - 4);
  }
  ProbeRequestFrame f;
  try {
    f = parse_mac_frame(mac_frame);
  } catch (const NotProbeRequest& e) {
    throw NotProbeRequest(e.message(), rt_len + e.offset());
  } catch (const ParseError& e) {
    throw ParseError(e.message(), rt_len + e.offset());
  }
  f.rss_dbm = rss;
  if (channel != 0) f.channel_mhz = channel;
  f.timestamp_us = timestamp_us;
  return f;
}

}  // namespace prsim
