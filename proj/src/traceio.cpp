#include "prsim/traceio.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "prsim/error.hpp"

namespace prsim {
namespace {

void put_u32le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16le(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at,
                      bool big_endian) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const std::uint32_t byte = b[at + (big_endian ? i : 3 - i)];
    v = (v << 8) | byte;
  }
  return v;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at,
                      bool big_endian) {
  return big_endian ? static_cast<std::uint16_t>((b[at] << 8) | b[at + 1])
                    : static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

}  // namespace

Bytes encode_pcap(std::span<const PcapRecord> records) {
  std::size_t total = kPcapGlobalHeaderLen;
  for (const auto& r : records) total += kPcapRecordHeaderLen + r.data.size();
  Bytes out;
  out.reserve(total);
  put_u32le(out, kPcapMagic);
  put_u16le(out, 2);
  put_u16le(out, 4);
  put_u32le(out, 0);  // thiszone
  put_u32le(out, 0);  // sigfigs
  put_u32le(out, kPcapSnaplen);
  put_u32le(out, kLinktypeRadiotap);

  std::int64_t prev = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.timestamp_us < 0) {
      throw IoError("pcap record " + std::to_string(i) +
                    " has a negative timestamp");
    }
    if (i > 0 && r.timestamp_us < prev) {
      throw IoError("pcap records are not time-sorted at record " +
                    std::to_string(i));
    }
    if (r.data.size() > kPcapSnaplen) {
      throw IoError("pcap record " + std::to_string(i) + " exceeds snaplen");
    }
    prev = r.timestamp_us;
    put_u32le(out, static_cast<std::uint32_t>(r.timestamp_us / 1000000));
    put_u32le(out, static_cast<std::uint32_t>(r.timestamp_us % 1000000));
    put_u32le(out, static_cast<std::uint32_t>(r.data.size()));
    put_u32le(out, r.orig_len ? r.orig_len
                              : static_cast<std::uint32_t>(r.data.size()));
    out.insert(out.end(), r.data.begin(), r.data.end());
  }
  return out;
}

void write_pcap(std::span<const PcapRecord> records,
                const std::filesystem::path& path) {
  write_file(path, encode_pcap(records));
}

PcapFile decode_pcap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPcapGlobalHeaderLen) {
    throw IoError("short pcap global header", bytes.size());
  }
  bool big_endian = false;
  bool nanos = false;
  const std::uint32_t magic_le = get_u32(bytes, 0, false);
  const std::uint32_t magic_be = get_u32(bytes, 0, true);
  if (magic_le == kPcapMagic || magic_le == kPcapMagicNanos) {
    nanos = magic_le == kPcapMagicNanos;
  } else if (magic_be == kPcapMagic || magic_be == kPcapMagicNanos) {
    big_endian = true;
    nanos = magic_be == kPcapMagicNanos;
  } else {
    throw IoError("bad pcap magic", 0);
  }

  PcapFile file;
  file.version_major = get_u16(bytes, 4, big_endian);
  file.version_minor = get_u16(bytes, 6, big_endian);
  file.snaplen = get_u32(bytes, 16, big_endian);
  file.linktype = get_u32(bytes, 20, big_endian);

  std::size_t pos = kPcapGlobalHeaderLen;
  while (pos < bytes.size()) {
    if (pos + kPcapRecordHeaderLen > bytes.size()) {
      throw IoError("short pcap record header", pos);
    }
    const std::uint32_t sec = get_u32(bytes, pos, big_endian);
    const std::uint32_t frac = get_u32(bytes, pos + 4, big_endian);
    const std::uint32_t incl = get_u32(bytes, pos + 8, big_endian);
    const std::uint32_t orig = get_u32(bytes, pos + 12, big_endian);
    if (pos + kPcapRecordHeaderLen + incl > bytes.size()) {
      throw IoError("pcap record overruns file", pos + 8);
    }
    PcapRecord r;
    r.timestamp_us = static_cast<std::int64_t>(sec) * 1000000 +
                     (nanos ? frac / 1000 : frac);
    r.orig_len = orig;
    const auto data = bytes.subspan(pos + kPcapRecordHeaderLen, incl);
    r.data.assign(data.begin(), data.end());
    file.records.push_back(std::move(r));
    pos += kPcapRecordHeaderLen + incl;
  }
  return file;
}

PcapFile read_pcap(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return decode_pcap(bytes);
}

std::vector<PcapRecord> frames_to_records(
    std::span<const ProbeRequestFrame> frames) {
  std::vector<PcapRecord> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    PcapRecord r;
    r.timestamp_us = f.timestamp_us;
    r.data = encode_capture(f);
    r.orig_len = static_cast<std::uint32_t>(r.data.size());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ProbeRequestFrame> records_to_frames(
    std::span<const PcapRecord> records) {
  std::vector<ProbeRequestFrame> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(parse_frame(records[i].data, records[i].timestamp_us));
    } catch (const NotProbeRequest&) {
      continue;
    } catch (const ParseError& e) {
      throw ParseError("pcap record " + std::to_string(i) + ": " + e.message(),
                       e.offset());
    }
  }
  return out;
}

std::vector<ProbeRequestFrame> read_probe_requests(
    const std::filesystem::path& path) {
  const PcapFile file = read_pcap(path);
  if (file.linktype != kLinktypeRadiotap) {
    throw IoError("unsupported pcap linktype " + std::to_string(file.linktype) +
                  " (expected 127, radiotap)", 20);
  }
  return records_to_frames(file.records);
}

// --- labels -------------------------------------------------------------------

void write_labels(std::span<const EmissionRecord> records, std::ostream& out) {
  out << kLabelHeader << '\n';
  char buf[256];
  for (const auto& r : records) {
    const std::int64_t sec = r.timestamp_us / 1000000;
    const std::int64_t usec = r.timestamp_us % 1000000;
    std::snprintf(buf, sizeof buf,
                  "%" PRIu64 ",%" PRId64 ".%06" PRId64 ",%" PRIu32
                  ",%d,%s,%s,%u,%.3f,%.3f,%d,%" PRIu32 "\n",
                  r.frame_index, sec, usec, r.device_id,
                  static_cast<int>(r.state), r.true_mac.to_string().c_str(),
                  r.emitted_mac.to_string().c_str(),
                  static_cast<unsigned>(r.seq_num), r.x_m, r.y_m, r.rss_dbm,
                  r.burst_index);
    out << buf;
  }
}

void write_labels(std::span<const EmissionRecord> records,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_labels(records, out);
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view field, const char* column, std::size_t line) {
  T v{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(std::string("labels: bad ") + column + " '" +
                         std::string(field) + "'",
                     line);
  }
  return v;
}

double parse_real(std::string_view field, const char* column, std::size_t line) {
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(std::string("labels: bad ") + column + " '" + s + "'",
                     line);
  }
  return v;
}

MacAddress parse_mac_field(std::string_view field, const char* column,
                           std::size_t line) {
  try {
    return parse_mac(field);
  } catch (const ParseError&) {
    throw ParseError(std::string("labels: bad ") + column + " '" +
                         std::string(field) + "'",
                     line);
  }
}

}  // namespace

std::vector<EmissionRecord> read_labels(std::istream& in) {
  std::vector<EmissionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("labels: missing header line", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLabelHeader) throw ParseError("labels: unexpected header", 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) {
      throw ParseError("labels: expected 11 columns, got " +
                           std::to_string(f.size()) + "",
                       line_no);
    }
    EmissionRecord r;
    r.frame_index = parse_integer<std::uint64_t>(f[0], "frame_index", line_no);
    const double ts = parse_real(f[1], "timestamp_s", line_no);
    if (ts < 0) throw ParseError("labels: negative timestamp", line_no);
    r.timestamp_us = static_cast<std::int64_t>(std::llround(ts * 1e6));
    r.device_id = parse_integer<std::uint32_t>(f[2], "device_id", line_no);
    const int state = parse_integer<int>(f[3], "state", line_no);
    if (state < 0 || state > 3) throw ParseError("labels: bad state", line_no);
    r.state = static_cast<DeviceState>(state);
    r.true_mac = parse_mac_field(f[4], "true_mac", line_no);
    r.emitted_mac = parse_mac_field(f[5], "emitted_mac", line_no);
    r.seq_num = parse_integer<std::uint16_t>(f[6], "seq_num", line_no);
    if (r.seq_num > 4095) throw ParseError("labels: seq_num above 4095", line_no);
    r.x_m = parse_real(f[7], "x_m", line_no);
    r.y_m = parse_real(f[8], "y_m", line_no);
    r.rss_dbm = parse_integer<int>(f[9], "rss_dbm", line_no);
    r.burst_index = parse_integer<std::uint32_t>(f[10], "burst_index", line_no);
    out.push_back(r);
  }
  return out;
}

std::vector<EmissionRecord> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_labels(in);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string digest_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace prsim
