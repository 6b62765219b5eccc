#include <doctest.h>

#include "prsim/frame80211.hpp"
#include "prsim/random.hpp"

using namespace prsim;

namespace {

RadioCapabilities galaxy_s10() {
  RadioCapabilities c;
  c.supported_rates_mbps = {6, 9, 12, 18};
  c.ext_rates_mbps = {24, 36};
  c.ht_cap = parse_hex("98abcdef01234567");
  c.vht_cap = parse_hex("ab12cd34ef567890");
  c.ext_cap = parse_hex("12ab34cd56ef");
  return c;
}

ProbeRequestFrame random_frame(Rng& rng) {
  ProbeRequestFrame f;
  f.seq_num = static_cast<std::uint16_t>(rng.uniform_int(0, 4095));
  for (auto& o : f.src.octets) o = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  if (rng.bernoulli(0.3)) {
    f.ssid.resize(rng.uniform_int(1, 32));
    for (auto& b : f.ssid) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  }
  const auto n = rng.uniform_int(0, 8);
  for (std::uint64_t i = 0; i < n; ++i) {
    InformationElement ie;
    ie.tag = static_cast<std::uint8_t>(rng.uniform_int(1, 255));
    ie.value.resize(rng.uniform_int(0, 255));
    for (auto& b : ie.value) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    f.ies.push_back(std::move(ie));
  }
  f.rss_dbm = static_cast<int>(rng.uniform_int(0, 100)) - 100;
  f.channel_mhz = rng.bernoulli(0.5) ? 2437 : 5180;
  f.timestamp_us = static_cast<std::int64_t>(rng.uniform_int(0, 1'000'000'000));
  return f;
}

}  // namespace

TEST_CASE("rates are encoded in 500 kb/s units") {
  const std::vector<double> r{6, 9, 12, 18};
  CHECK(encode_rates(r) == Bytes{0x0c, 0x12, 0x18, 0x24});
  const std::vector<double> r2{1, 5.5};
  CHECK(encode_rates(r2) == Bytes{0x02, 0x0b});
}

TEST_CASE("hex helpers") {
  CHECK(parse_hex("98abcdef01234567") ==
        Bytes{0x98, 0xab, 0xcd, 0xef, 0x01, 0x23, 0x45, 0x67});
  CHECK(to_hex(parse_hex("00FF10")) == "00ff10");
  CHECK_THROWS_AS(parse_hex("abc"), ConfigError);
  CHECK_THROWS_AS(parse_hex("zz"), ConfigError);
}

TEST_CASE("capability validation") {
  RadioCapabilities c = galaxy_s10();
  CHECK_NOTHROW(c.validate());
  c.supported_rates_mbps = {1, 2, 5.5, 11, 6, 9, 12, 18, 24};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = galaxy_s10();
  c.supported_rates_mbps = {6.3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = galaxy_s10();
  c.ht_cap.assign(256, 0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("probe request element order and content") {
  const auto f = build_probe_request(galaxy_s10(), parse_mac("02:00:00:00:00:01"), 0, {},
                                     -50, 0);
  REQUIRE(f.ies.size() == 5);
  CHECK(f.ies[0].tag == ie_tag::kSupportedRates);
  CHECK(f.ies[1].tag == ie_tag::kExtSupportedRates);
  CHECK(f.ies[2].tag == ie_tag::kHtCapabilities);
  CHECK(f.ies[3].tag == ie_tag::kExtCapabilities);
  CHECK(f.ies[4].tag == ie_tag::kVhtCapabilities);
  CHECK(f.ies[2].value == parse_hex("98abcdef01234567"));
  CHECK(f.ies[0].value == Bytes{0x0c, 0x12, 0x18, 0x24});
  CHECK(f.dst.is_broadcast());
  CHECK(f.bssid.is_broadcast());

  const Bytes b = serialize_frame(f);
  CHECK(b[0] == 0x40);
  CHECK(b[1] == 0x00);
  CHECK(b[2] == 0x00);  // duration
  CHECK(b[3] == 0x00);
  // wildcard SSID is the first element
  CHECK(b[24] == 0x00);
  CHECK(b[25] == 0x00);
  CHECK(b[26] == ie_tag::kSupportedRates);
}

TEST_CASE("vendor elements come last, empty fields are skipped") {
  RadioCapabilities c;
  c.supported_rates_mbps = {1, 2};
  c.vendor_ies = {{ie_tag::kVendorSpecific, parse_hex("0010180200")}};
  const auto f = build_probe_request(c, {}, 1, {}, -40, 0);
  REQUIRE(f.ies.size() == 2);
  CHECK(f.ies[0].tag == ie_tag::kSupportedRates);
  CHECK(f.ies[1].tag == ie_tag::kVendorSpecific);
}

TEST_CASE("address fields") {
  const auto f = build_probe_request(galaxy_s10(), parse_mac("8a:79:1c:43:15:da"), 5, {},
                                     -50, 0);
  const Bytes b = serialize_frame(f);
  for (int i = 4; i < 10; ++i) CHECK(b[i] == 0xff);   // addr1
  CHECK(Bytes(b.begin() + 10, b.begin() + 16) ==
        Bytes{0x8a, 0x79, 0x1c, 0x43, 0x15, 0xda});   // addr2
  for (int i = 16; i < 22; ++i) CHECK(b[i] == 0xff);  // addr3
}

TEST_CASE("sequence control carries seq in bits 4-15") {
  for (std::uint16_t seq : {0, 1, 2047, 4095}) {
    const auto f = build_probe_request(galaxy_s10(), {}, seq, {}, -50, 0);
    const Bytes b = serialize_frame(f);
    const unsigned sc = b[22] | (b[23] << 8);
    CHECK((sc >> 4) == seq);
    CHECK((sc & 0xf) == 0);
  }
}

TEST_CASE("radiotap header layout") {
  auto f = build_probe_request(galaxy_s10(), {}, 0, {}, -39, 0);
  f.channel_mhz = 2437;
  const Bytes b = encode_capture(f);
  REQUIRE(b.size() > kRadiotapLen);
  const Bytes expect{0x00, 0x00, 0x0f, 0x00,       // version, pad, length 15
                     0x2a, 0x00, 0x00, 0x00,       // Flags | Channel | dBm signal
                     0x00, 0x00,                   // flags, pad
                     0x85, 0x09, 0xa0, 0x00,       // 2437 MHz, 2 GHz | CCK
                     static_cast<std::uint8_t>(-39)};
  CHECK(Bytes(b.begin(), b.begin() + kRadiotapLen) == expect);
  CHECK(b[kRadiotapLen] == 0x40);
}

TEST_CASE("capture length of a full capability frame sits in 90-150 bytes") {
  RadioCapabilities c = galaxy_s10();
  c.vendor_ies = {{ie_tag::kVendorSpecific, parse_hex("00101802000c1c0000")}};
  const auto f = build_probe_request(c, {}, 0, {}, -50, 0);
  const auto n = encode_capture(f).size();
  CHECK(n >= 90);
  CHECK(n <= 150);
}

TEST_CASE("capture round trip on random frames") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto f = random_frame(rng);
    const Bytes once = encode_capture(f);
    const auto back = parse_frame(once, f.timestamp_us);
    REQUIRE(back == f);
    REQUIRE(encode_capture(back) == once);
  }
}

TEST_CASE("mac frame round trip") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto f = random_frame(rng);
    const auto back = parse_mac_frame(serialize_frame(f));
    CHECK(back.src == f.src);
    CHECK(back.seq_num == f.seq_num);
    CHECK(back.ssid == f.ssid);
    CHECK(back.ies == f.ies);
  }
}

TEST_CASE("malformed input reports an offset") {
  const auto f = build_probe_request(galaxy_s10(), {}, 0, {}, -50, 0);
  const Bytes full = encode_capture(f);

  Bytes cut(full.begin(), full.begin() + 20);
  CHECK_THROWS_AS(parse_frame(cut), ParseError);

  Bytes overrun = full;
  overrun[kRadiotapLen + 24 + 1] = 200;  // SSID length past the end
  try {
    parse_frame(overrun);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() >= kRadiotapLen + 24);
  }

  Bytes bad_rt = full;
  bad_rt[2] = 0xff;  // radiotap length past the buffer
  CHECK_THROWS_AS(parse_frame(bad_rt), ParseError);
}

TEST_CASE("other management subtypes are flagged, not parsed") {
  const auto f = build_probe_request(galaxy_s10(), {}, 0, {}, -50, 0);
  Bytes b = encode_capture(f);
  b[kRadiotapLen] = 0x80;  // beacon
  CHECK_THROWS_AS(parse_frame(b), NotProbeRequest);
}

TEST_CASE("unknown elements survive opaquely") {
  auto f = build_probe_request(galaxy_s10(), {}, 0, {}, -50, 0);
  f.ies.push_back({0x99, Bytes{1, 2, 3}});
  const auto back = parse_frame(encode_capture(f));
  CHECK(back.ies.back() == InformationElement{0x99, Bytes{1, 2, 3}});
}

TEST_CASE("serialization is stable") {
  const auto f = build_probe_request(galaxy_s10(), {}, 9, {}, -50, 0);
  CHECK(serialize_frame(f) == serialize_frame(f));
}
