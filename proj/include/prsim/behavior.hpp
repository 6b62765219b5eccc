#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prsim/random.hpp"

namespace prsim {

/// Device operating mode. The integer codes are the ones written to label
/// files.
enum class DeviceState : std::uint8_t {
  Shutdown = 0,
  ScreenOff = 1,
  ScreenOn = 2,
  Activity = 3,
};

inline constexpr std::size_t kNumStates = 4;
inline constexpr std::array<DeviceState, kNumStates> kAllStates = {
    DeviceState::Shutdown, DeviceState::ScreenOff, DeviceState::ScreenOn,
    DeviceState::Activity};

constexpr std::size_t index_of(DeviceState s) {
  return static_cast<std::size_t>(s);
}

std::string_view to_string(DeviceState s);
/// Accepts the snake_case names ("screen_off") or the integer codes ("1").
DeviceState parse_device_state(std::string_view text);

/// Finite distribution written as `value:prob / value:prob / ...`.
class DiscreteDistribution {
 public:
  struct Entry {
    double value;
    double prob;
    bool operator==(const Entry&) const = default;
  };

  DiscreteDistribution() = default;
  /// Throws ConfigError unless non-empty, finite, probs in (0, 1] summing to
  /// 1 within 1e-9.
  explicit DiscreteDistribution(std::vector<Entry> entries);

  static DiscreteDistribution constant(double value) {
    return DiscreteDistribution({{value, 1.0}});
  }
  /// Parses the `val:prob / val:prob` syntax. Throws ParseError.
  static DiscreteDistribution parse(std::string_view text);

  double sample(Rng& rng) const;
  double mean() const;
  double max_value() const;
  double min_value() const;
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  std::string to_string() const;

  bool operator==(const DiscreteDistribution&) const = default;

 private:
  std::vector<Entry> entries_;
  std::vector<double> cumulative_;
};

/// Scan timing for one state.
struct StateTiming {
  DiscreteDistribution dwell;        // seconds spent in the state
  double scan_interval_s = 0.0;      // base gap between burst starts
  double scan_jitter_frac = 0.0;     // gap = base * (1 + U(-j, +j))
  DiscreteDistribution burst_length; // frames per burst
  DiscreteDistribution intra_burst;  // seconds between frames of a burst
  DiscreteDistribution inter_burst;  // delay from state entry to first burst
  DiscreteDistribution jitter;       // added to every intra-burst gap
};

using TransitionMatrix = std::array<std::array<double, kNumStates>, kNumStates>;

struct BehaviorConfig {
  std::array<StateTiming, kNumStates> states{};
  TransitionMatrix transitions{};
  /// Hourly multipliers applied to transitions into Activity.
  std::array<double, 24> diurnal_weights{};

  StateTiming& timing(DeviceState s) { return states[index_of(s)]; }
  const StateTiming& timing(DeviceState s) const {
    return states[index_of(s)];
  }
  double& p(DeviceState from, DeviceState to) {
    return transitions[index_of(from)][index_of(to)];
  }
  double p(DeviceState from, DeviceState to) const {
    return transitions[index_of(from)][index_of(to)];
  }

  /// Defaults: Alg.-1 scan intervals and jitter fractions, the Alg.-1
  /// transition graph plus ScreenOff -> Shutdown at 0.02, daytime-weighted
  /// diurnal curve.
  static BehaviorConfig defaults();

  /// Throws ConfigError on any broken invariant.
  void validate() const;
};

/// Hour multipliers used by BehaviorConfig::defaults(): 1.5 for 08:00-22:59,
/// 0.5 otherwise.
std::array<double, 24> default_diurnal_weights();

struct ScanEvent {
  std::uint32_t device_id = 0;
  double t = 0.0;
  std::uint32_t burst_index = 0;
  std::uint32_t frame_index_in_burst = 0;
  DeviceState state = DeviceState::Shutdown;
  bool is_burst_start = false;

  bool operator==(const ScanEvent&) const = default;
};

struct StateInterval {
  DeviceState state;
  double enter_t;
  double exit_t;

  bool operator==(const StateInterval&) const = default;
};

struct FsmTrace {
  std::vector<StateInterval> intervals;
  std::vector<ScanEvent> events;
};

double sample_state_duration(const BehaviorConfig& cfg, DeviceState s,
                             Rng& rng);

/// Samples the successor of `s`. The into-Activity entry of row `s` is scaled by
/// the diurnal weight for `clock_hour` and the row is renormalized. Throws
/// ConfigError when the modulated row is all zero.
DeviceState next_state(const BehaviorConfig& cfg, DeviceState s,
                       int clock_hour, Rng& rng);

/// Row of the transition matrix after diurnal modulation and renormalization.
std::array<double, kNumStates> modulated_row(const BehaviorConfig& cfg,
                                             DeviceState s, int clock_hour);

/// Bursts emitted while the device sits in `s` during [t0, t1). Burst indices
/// start at 0; bursts running past t1 are truncated.
std::vector<ScanEvent> schedule_bursts(const BehaviorConfig& cfg,
                                       DeviceState s, double t0, double t1,
                                       Rng& rng);

/// Wall-clock hour of day for scenario time `t`, given the start time as
/// seconds since midnight.
int clock_hour(double start_clock_s, double t);

/// Runs the FSM over [0, horizon). Intervals partition the horizon; burst
/// indices are numbered across the whole run.
FsmTrace run_fsm(const BehaviorConfig& cfg, double horizon,
                 DeviceState start_state, double start_clock_s, Rng& rng);

}  // namespace prsim
