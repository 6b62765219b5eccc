#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "prsim/engine.hpp"
#include "prsim/frame80211.hpp"

namespace prsim {

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicNanos = 0xa1b23c4d;
inline constexpr std::uint32_t kLinktypeRadiotap = 127;
inline constexpr std::uint32_t kPcapSnaplen = 65535;
inline constexpr std::size_t kPcapGlobalHeaderLen = 24;
inline constexpr std::size_t kPcapRecordHeaderLen = 16;

struct PcapRecord {
  std::int64_t timestamp_us = 0;
  std::uint32_t orig_len = 0;  // 0 on write means "same as data"
  Bytes data;

  bool operator==(const PcapRecord&) const = default;
};

struct PcapFile {
  std::uint16_t version_major = 2;
  std::uint16_t version_minor = 4;
  std::uint32_t snaplen = kPcapSnaplen;
  std::uint32_t linktype = kLinktypeRadiotap;
  std::vector<PcapRecord> records;
};

/// Classic pcap, little-endian, microsecond timestamps, linktype 127. Records
/// must be time-sorted. Throws IoError.
Bytes encode_pcap(std::span<const PcapRecord> records);
void write_pcap(std::span<const PcapRecord> records,
                const std::filesystem::path& path);

/// Reads either byte order, micro- or nanosecond magic. Throws IoError with
/// the byte offset of a bad magic, a short read or a record overrun.
PcapFile decode_pcap(std::span<const std::uint8_t> bytes);
PcapFile read_pcap(const std::filesystem::path& path);

/// Radiotap + 802.11 encoding of every frame, timestamped from the frame.
std::vector<PcapRecord> frames_to_records(
    std::span<const ProbeRequestFrame> frames);

/// Probe requests of a capture; other 802.11 frames are skipped. Throws
/// ParseError (offset relative to the record) for malformed probe requests.
std::vector<ProbeRequestFrame> records_to_frames(
    std::span<const PcapRecord> records);

std::vector<ProbeRequestFrame> read_probe_requests(
    const std::filesystem::path& path);

inline constexpr std::string_view kLabelHeader =
    "frame_index,timestamp_s,device_id,state,true_mac,emitted_mac,seq_num,x_m,"
    "y_m,rss_dbm,burst_index";

void write_labels(std::span<const EmissionRecord> records, std::ostream& out);
void write_labels(std::span<const EmissionRecord> records,
                  const std::filesystem::path& path);

/// Throws ParseError whose offset is the 1-based line number.
std::vector<EmissionRecord> read_labels(std::istream& in);
std::vector<EmissionRecord> read_labels(const std::filesystem::path& path);

/// Reads a whole file. Throws IoError.
Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

/// Hex FNV-1a digest used in run manifests.
std::string digest_hex(std::span<const std::uint8_t> bytes);

}  // namespace prsim
