#include "prsim/phy.hpp"

#include <algorithm>
#include <cmath>

#include "prsim/error.hpp"

namespace prsim {

void ChannelModel::validate() const {
  if (!(d0_m > 0.0)) throw ConfigError("channel: d0_m must be positive");
  if (!(exponent > 0.0)) throw ConfigError("channel: exponent must be positive");
  if (!(shadow_sigma_db >= 0.0)) {
    throw ConfigError("channel: shadow_sigma_db must be >= 0");
  }
  if (!(shadow_decorrelation_m > 0.0)) {
    throw ConfigError("channel: shadow_decorrelation_m must be positive");
  }
  if (!(interference_loss_prob >= 0.0 && interference_loss_prob <= 1.0)) {
    throw ConfigError("channel: interference_loss_prob must be in [0, 1]");
  }
}

double ChannelModel::mean_rss_dbm(double distance_m) const {
  const double d = std::max(distance_m, d0_m);
  return tx_power_dbm - pl_d0_db - 10.0 * exponent * std::log10(d / d0_m);
}

double fading_db(const Fading& fading, Rng& rng) {
  if (std::holds_alternative<RayleighFading>(fading)) {
    // |h|^2 ~ Exp(1)
    return 10.0 * std::log10(rng.exponential(1.0));
  }
  if (const auto* rician = std::get_if<RicianFading>(&fading)) {
    const double k = std::pow(10.0, rician->k_db / 10.0);
    const double los = std::sqrt(k / (k + 1.0));
    const double sigma = std::sqrt(1.0 / (2.0 * (k + 1.0)));
    const double re = los + sigma * rng.normal();
    const double im = sigma * rng.normal();
    return 10.0 * std::log10(std::max(re * re + im * im, 1e-12));
  }
  return 0.0;
}

namespace {

std::optional<int> received(const ChannelModel& model, double distance_m,
                            double shadow_db, bool interfered, Rng& rng) {
  const double rss =
      model.mean_rss_dbm(distance_m) + shadow_db + fading_db(model.fading, rng);
  if (interfered || rss < model.rss_floor_dbm) return std::nullopt;
  return static_cast<int>(std::lround(std::clamp(rss, -128.0, 127.0)));
}

}  // namespace

std::optional<int> rss_with_shadowing(const ChannelModel& model,
                                      double distance_m, double shadow_db,
                                      Rng& rng) {
  const bool interfered = rng.uniform01() < model.interference_loss_prob;
  return received(model, distance_m, shadow_db, interfered, rng);
}

std::optional<int> rss_at(const ChannelModel& model, double distance_m,
                          Rng& rng) {
  const bool interfered = rng.uniform01() < model.interference_loss_prob;
  const double shadow = model.shadow_sigma_db * rng.normal();
  return received(model, distance_m, shadow, interfered, rng);
}

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double ShadowingProcess::sample(const ChannelModel& model, const Position& pos,
                                Rng& rng) {
  if (!started_) {
    started_ = true;
    value_db_ = model.shadow_sigma_db * rng.normal();
    last_ = pos;
    return value_db_;
  }
  const double moved = distance(pos, last_);
  if (moved > 0.0) {
    const double rho = std::exp(-moved / model.shadow_decorrelation_m);
    value_db_ = rho * value_db_ +
                std::sqrt(1.0 - rho * rho) * model.shadow_sigma_db * rng.normal();
    last_ = pos;
  }
  return value_db_;
}

void validate(const MobilityModel& model) {
  if (const auto* rw = std::get_if<RandomWaypointMobility>(&model)) {
    if (!(rw->area.x1 > rw->area.x0 && rw->area.y1 > rw->area.y0)) {
      throw ConfigError("mobility: empty area");
    }
    if (!(rw->speed_min_mps > 0.0 && rw->speed_max_mps >= rw->speed_min_mps)) {
      throw ConfigError("mobility: speed range must satisfy 0 < min <= max");
    }
    if (rw->pause_s.empty() || rw->pause_s.min_value() < 0.0) {
      throw ConfigError("mobility: pause distribution must be non-negative");
    }
  }
}

Trajectory::Trajectory(MobilityModel model, std::uint64_t seed,
                       std::uint32_t device_id)
    : model_(std::move(model)), rng_(derive_seed(seed, device_id, "mobility")) {}

void Trajectory::extend_to(double t) {
  const auto& rw = std::get<RandomWaypointMobility>(model_);
  if (legs_.empty()) {
    const Position start = rw.area.sample(rng_);
    legs_.push_back({0.0, 0.0, rw.pause_s.sample(rng_), start, start});
  }
  while (legs_.back().t_end <= t) {
    const Leg& prev = legs_.back();
    const Position from = prev.to;
    const Position to = rw.area.sample(rng_);
    const double speed = rng_.uniform(rw.speed_min_mps, rw.speed_max_mps);
    const double travel = distance(from, to) / speed;
    const double t0 = prev.t_end;
    // Zero-length legs would stall the loop when pauses are zero too.
    const double arrive = t0 + std::max(travel, 1e-6);
    legs_.push_back({t0, arrive, arrive + rw.pause_s.sample(rng_), from, to});
  }
}

Position Trajectory::at(double t) {
  if (const auto* s = std::get_if<StaticMobility>(&model_)) return s->pos;
  t = std::max(t, 0.0);
  extend_to(t);
  if (cursor_ >= legs_.size() || legs_[cursor_].t_start > t) cursor_ = 0;
  while (legs_[cursor_].t_end <= t) ++cursor_;
  const Leg& leg = legs_[cursor_];
  if (t >= leg.t_arrive) return leg.to;
  const double f = (t - leg.t_start) / (leg.t_arrive - leg.t_start);
  return {leg.from.x + f * (leg.to.x - leg.from.x),
          leg.from.y + f * (leg.to.y - leg.from.y)};
}

Position position_at(const MobilityModel& model, std::uint64_t seed,
                     std::uint32_t device_id, double t) {
  Trajectory traj(model, seed, device_id);
  return traj.at(t);
}

}  // namespace prsim
