#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prsim/behavior.hpp"
#include "prsim/frame80211.hpp"
#include "prsim/mac.hpp"
#include "prsim/phy.hpp"

namespace prsim {

/// Static attributes of one simulated device plus the name of the behavior
/// model driving it.
struct DeviceProfile {
  std::uint32_t device_id = 0;
  std::string template_name;
  std::string vendor;
  std::string model;
  Oui oui{};
  MacAddress true_mac;
  RadioCapabilities caps;
  MacPolicy mac_policy;
  std::string behavior = "default";
  MobilityModel mobility = StaticMobility{};
  DeviceState start_state = DeviceState::ScreenOff;
  double ssid_directed_prob = 0.1;
  bool seq_reset_on_mac_change = false;

  void validate() const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double duration_s = 3600.0;
  /// ISO-8601 local time `YYYY-MM-DDTHH:MM:SS`; only the time of day drives
  /// the diurnal weights.
  std::string start_clock = "2025-01-01T09:00:00";
  std::map<std::string, BehaviorConfig> behaviors{
      {"default", BehaviorConfig::defaults()}};
  std::vector<DeviceProfile> devices;
  ChannelModel channel;

  double start_clock_seconds() const;
  const BehaviorConfig& behavior_for(const DeviceProfile& device) const;
  /// Throws ConfigError.
  void validate() const;
};

/// Parses `YYYY-MM-DDTHH:MM:SS` to seconds since midnight. Throws ConfigError.
double parse_clock_of_day(std::string_view iso);

/// Ground truth for one captured frame.
struct EmissionRecord {
  std::uint64_t frame_index = 0;
  std::int64_t timestamp_us = 0;
  std::uint32_t device_id = 0;
  DeviceState state = DeviceState::Shutdown;
  MacAddress true_mac;
  MacAddress emitted_mac;
  std::uint16_t seq_num = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  int rss_dbm = 0;
  std::uint32_t burst_index = 0;

  double timestamp_s() const { return static_cast<double>(timestamp_us) * 1e-6; }
  bool operator==(const EmissionRecord&) const = default;
};

struct MacChange {
  double t;
  MacAddress mac;
};

/// One frame on its way out of a device, before the global merge.
struct PendingFrame {
  ProbeRequestFrame frame;
  EmissionRecord record;  // frame_index assigned at merge time
  std::uint32_t frame_index_in_burst = 0;
};

struct DeviceStream {
  std::uint32_t device_id = 0;
  std::vector<PendingFrame> frames;  // time-sorted
  std::vector<StateInterval> intervals;
  std::vector<MacChange> mac_changes;  // every rotation, including lost bursts
  std::uint64_t lost_frames = 0;
};

struct SummaryStats {
  std::uint64_t frames = 0;
  std::uint64_t lost_frames = 0;
  std::size_t devices = 0;
  std::size_t distinct_emitted_macs = 0;
  /// Distinct on-air addresses of devices using a randomizing policy.
  std::size_t randomized_macs = 0;
  /// Devices seen on air with their hardware address.
  std::size_t real_macs = 0;
  std::array<std::uint64_t, kNumStates> frames_per_state{};
};

struct ScenarioResult {
  std::vector<ProbeRequestFrame> frames;
  std::vector<EmissionRecord> records;
  std::vector<DeviceStream> device_logs;  // frames moved out; logs only
  SummaryStats stats;
};

/// Next 12-bit sequence number. A MAC change under `reset_on_mac_change`
/// restarts the counter at a random value.
std::uint16_t seq_next(std::uint16_t counter, bool mac_changed,
                       bool reset_on_mac_change, Rng& rng);

/// Simulates one device in isolation. Every random draw comes from streams
/// derived from (cfg.seed, device_id).
DeviceStream simulate_device(const ScenarioConfig& cfg,
                             const DeviceProfile& device);

/// Stable k-way merge ordered by (timestamp, device_id, burst, frame in burst).
std::vector<PendingFrame> merge_streams(std::span<DeviceStream> streams);

/// Runs every device (on `workers` threads; 0 picks the hardware count),
/// merges, and assigns frame indices. Output is identical for any worker
/// count. Throws ConfigError before doing any work when `cfg` is invalid.
ScenarioResult run_scenario(const ScenarioConfig& cfg, unsigned workers = 1);

}  // namespace prsim
