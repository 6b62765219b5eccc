#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "prsim/behavior.hpp"
#include "prsim/random.hpp"

namespace prsim {

struct RayleighFading {
  bool operator==(const RayleighFading&) const = default;
};
struct RicianFading {
  double k_db = 6.0;
  bool operator==(const RicianFading&) const = default;
};
using Fading = std::variant<std::monostate, RayleighFading, RicianFading>;

/// Log-distance path loss with log-normal shadowing, optional small-scale
/// fading and random interference loss. The sniffer sits at the origin.
struct ChannelModel {
  double tx_power_dbm = 15.0;
  double pl_d0_db = 40.0;
  double d0_m = 1.0;
  double exponent = 2.5;
  double shadow_sigma_db = 4.0;
  /// Decorrelation distance of the shadowing process used by the engine.
  double shadow_decorrelation_m = 10.0;
  Fading fading{};
  double interference_loss_prob = 0.02;
  double rss_floor_dbm = -95.0;
  std::uint16_t channel_mhz = 2437;

  void validate() const;

  /// Deterministic part: tx power minus path loss at max(distance, d0).
  double mean_rss_dbm(double distance_m) const;

  bool operator==(const ChannelModel&) const = default;
};

/// Received signal strength for one frame, or nullopt when the frame is lost
/// to interference or falls below the capture floor. Shadowing is drawn
/// independently per call.
std::optional<int> rss_at(const ChannelModel& model, double distance_m,
                          Rng& rng);

/// Same, with the shadowing term supplied by the caller.
std::optional<int> rss_with_shadowing(const ChannelModel& model,
                                      double distance_m, double shadow_db,
                                      Rng& rng);

/// Fading term in dB (0 for no fading).
double fading_db(const Fading& fading, Rng& rng);

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

/// Spatially correlated shadowing (exponential autocorrelation in distance
/// moved). A device that does not move keeps its shadowing value.
class ShadowingProcess {
 public:
  double sample(const ChannelModel& model, const Position& pos, Rng& rng);

 private:
  bool started_ = false;
  double value_db_ = 0.0;
  Position last_{};
};

struct Area {
  double x0 = -30.0;
  double y0 = -30.0;
  double x1 = 30.0;
  double y1 = 30.0;

  bool contains(const Position& p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  Position sample(Rng& rng) const {
    return {rng.uniform(x0, x1), rng.uniform(y0, y1)};
  }
  bool operator==(const Area&) const = default;
};

struct StaticMobility {
  Position pos;
  bool operator==(const StaticMobility&) const = default;
};

struct RandomWaypointMobility {
  Area area;
  double speed_min_mps = 0.5;
  double speed_max_mps = 1.5;
  DiscreteDistribution pause_s = DiscreteDistribution::constant(0.0);
  bool operator==(const RandomWaypointMobility&) const = default;
};

using MobilityModel = std::variant<StaticMobility, RandomWaypointMobility>;

void validate(const MobilityModel& model);

/// Position of one device over time. Legs of the waypoint process are
/// generated lazily from a stream seeded by (seed, device_id), so the result is
/// a pure function of (model, seed, device_id, t). Queries in increasing time
/// order are amortized O(1).
class Trajectory {
 public:
  Trajectory(MobilityModel model, std::uint64_t seed, std::uint32_t device_id);

  Position at(double t);

 private:
  struct Leg {
    double t_start;
    double t_arrive;  // end of motion
    double t_end;     // end of pause
    Position from;
    Position to;
  };

  void extend_to(double t);

  MobilityModel model_;
  Rng rng_;
  std::vector<Leg> legs_;
  std::size_t cursor_ = 0;
};

Position position_at(const MobilityModel& model, std::uint64_t seed,
                     std::uint32_t device_id, double t);

}  // namespace prsim
