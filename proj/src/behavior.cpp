#include "prsim/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "prsim/error.hpp"

namespace prsim {

std::string_view to_string(DeviceState s) {
  switch (s) {
    case DeviceState::Shutdown:
      return "shutdown";
    case DeviceState::ScreenOff:
      return "screen_off";
    case DeviceState::ScreenOn:
      return "screen_on";
    case DeviceState::Activity:
      return "activity";
  }
  return "unknown";
}

DeviceState parse_device_state(std::string_view text) {
  for (auto s : kAllStates) {
    if (text == to_string(s)) return s;
  }
  if (text.size() == 1 && text[0] >= '0' && text[0] <= '3') {
    return static_cast<DeviceState>(text[0] - '0');
  }
  throw ConfigError("unknown device state '" + std::string(text) + "'");
}

// --- DiscreteDistribution ---------------------------------------------------

DiscreteDistribution::DiscreteDistribution(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("distribution has no entries");
  double total = 0.0;
  for (const auto& e : entries_) {
    if (!std::isfinite(e.value)) {
      throw ConfigError("distribution value is not finite");
    }
    if (!(e.prob > 0.0 && e.prob <= 1.0)) {
      throw ConfigError("distribution probability outside (0, 1]");
    }
    total += e.prob;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("distribution probabilities sum to " +
                      std::to_string(total) + ", expected 1");
  }
}

DiscreteDistribution DiscreteDistribution::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  };
  auto number = [&](const char* what) {
    skip_ws();
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] != ':' && text[pos] != '/' &&
           text[pos] != ' ' && text[pos] != '\t') {
      ++pos;
    }
    const std::string token(text.substr(start, pos - start));
    if (token.empty()) throw ParseError(std::string("expected ") + what, start);
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw ParseError(std::string("malformed ") + what + " '" + token + "'",
                       start);
    }
    skip_ws();
    return v;
  };

  while (true) {
    const double value = number("value");
    if (pos >= text.size() || text[pos] != ':') {
      throw ParseError("expected ':' after value", pos);
    }
    ++pos;
    const double prob = number("probability");
    entries.push_back({value, prob});
    if (pos >= text.size()) break;
    if (text[pos] != '/') throw ParseError("expected '/' between entries", pos);
    ++pos;
  }
  try {
    return DiscreteDistribution(std::move(entries));
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), 0);
  }
}

double DiscreteDistribution::sample(Rng& rng) const {
  if (entries_.size() == 1) return entries_.front().value;
  const double u = rng.uniform01() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::size_t>(
      static_cast<std::size_t>(it - cumulative_.begin()), entries_.size() - 1);
  return entries_[idx].value;
}

double DiscreteDistribution::mean() const {
  double m = 0.0;
  for (const auto& e : entries_) m += e.value * e.prob;
  return m;
}

double DiscreteDistribution::max_value() const {
  double m = entries_.front().value;
  for (const auto& e : entries_) m = std::max(m, e.value);
  return m;
}

double DiscreteDistribution::min_value() const {
  double m = entries_.front().value;
  for (const auto& e : entries_) m = std::min(m, e.value);
  return m;
}

std::string DiscreteDistribution::to_string() const {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out += " / ";
    std::snprintf(buf, sizeof buf, "%.17g:%.17g", entries_[i].value,
                  entries_[i].prob);
    out += buf;
  }
  return out;
}

// --- BehaviorConfig ---------------------------------------------------------

std::array<double, 24> default_diurnal_weights() {
  std::array<double, 24> w{};
  for (int h = 0; h < 24; ++h) w[h] = (h >= 8 && h <= 22) ? 1.5 : 0.5;
  return w;
}

BehaviorConfig BehaviorConfig::defaults() {
  using D = DiscreteDistribution;
  BehaviorConfig cfg;

  const D intra = D::parse("0.05:0.5 / 0.08:0.5");
  const D inter = D::parse("3.0:0.6 / 4.0:0.4");
  const D jitter = D::parse("0.05:0.5 / 0.1:0.5");

  auto& off = cfg.timing(DeviceState::Shutdown);
  off.dwell = D::parse("600:0.5 / 1800:0.5");
  off.burst_length = D::constant(1);
  off.intra_burst = intra;
  off.inter_burst = inter;
  off.jitter = jitter;

  auto& screen_off = cfg.timing(DeviceState::ScreenOff);
  screen_off.dwell = D::parse("300:0.3 / 600:0.4 / 1200:0.3");
  screen_off.scan_interval_s = 600;
  screen_off.scan_jitter_frac = 0.2;
  screen_off.burst_length = D::parse("1:0.6 / 2:0.4");
  screen_off.intra_burst = intra;
  screen_off.inter_burst = inter;
  screen_off.jitter = jitter;

  auto& screen_on = cfg.timing(DeviceState::ScreenOn);
  screen_on.dwell = D::parse("60:0.4 / 120:0.4 / 300:0.2");
  screen_on.scan_interval_s = 120;
  screen_on.scan_jitter_frac = 0.3;
  screen_on.burst_length = D::parse("1:0.3 / 2:0.4 / 3:0.3");
  screen_on.intra_burst = intra;
  screen_on.inter_burst = inter;
  screen_on.jitter = jitter;

  auto& activity = cfg.timing(DeviceState::Activity);
  activity.dwell = D::parse("120:0.3 / 300:0.4 / 600:0.3");
  activity.scan_interval_s = 30;
  activity.scan_jitter_frac = 0.5;
  activity.burst_length = D::parse("2:0.3 / 3:0.4 / 4:0.3");
  activity.intra_burst = intra;
  activity.inter_burst = inter;
  activity.jitter = jitter;

  using S = DeviceState;
  cfg.p(S::Shutdown, S::ScreenOn) = 0.5;
  cfg.p(S::Shutdown, S::ScreenOff) = 0.5;
  cfg.p(S::ScreenOn, S::Activity) = 0.5;
  cfg.p(S::ScreenOn, S::ScreenOff) = 0.5;
  cfg.p(S::ScreenOff, S::ScreenOn) = 0.6;
  cfg.p(S::ScreenOff, S::Activity) = 0.38;
  cfg.p(S::ScreenOff, S::Shutdown) = 0.02;
  cfg.p(S::Activity, S::ScreenOff) = 1.0;

  cfg.diurnal_weights = default_diurnal_weights();
  return cfg;
}

void BehaviorConfig::validate() const {
  for (auto s : kAllStates) {
    const auto& t = timing(s);
    const std::string name(to_string(s));
    if (t.dwell.empty()) throw ConfigError(name + ": missing dwell");
    if (t.dwell.min_value() <= 0.0) {
      throw ConfigError(name + ": dwell values must be positive");
    }
    if (s == DeviceState::Shutdown) {
      if (t.scan_interval_s != 0.0) {
        throw ConfigError("shutdown must have scan_interval_s = 0");
      }
    } else {
      if (!(t.scan_interval_s > 0.0)) {
        throw ConfigError(name + ": scan_interval_s must be positive");
      }
      if (!(t.scan_jitter_frac >= 0.0 && t.scan_jitter_frac < 1.0)) {
        throw ConfigError(name + ": scan jitter fraction must be in [0, 1)");
      }
      if (t.burst_length.empty() || t.intra_burst.empty() ||
          t.inter_burst.empty() || t.jitter.empty()) {
        throw ConfigError(name + ": missing burst timing distribution");
      }
      if (t.burst_length.min_value() < 1.0) {
        throw ConfigError(name + ": burst lengths must be >= 1");
      }
      if (t.intra_burst.min_value() + t.jitter.min_value() <= 0.0) {
        throw ConfigError(name + ": intra-burst gaps must be positive");
      }
      if (t.inter_burst.min_value() < 0.0) {
        throw ConfigError(name + ": inter-burst delay must be >= 0");
      }
    }
    double row = 0.0;
    for (double p : transitions[index_of(s)]) {
      if (!(p >= 0.0)) throw ConfigError(name + ": negative transition");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-9) {
      throw ConfigError(name + ": transition row sums to " +
                        std::to_string(row));
    }
  }
  for (double w : diurnal_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("diurnal weights must be finite and non-negative");
    }
  }
}

// --- operations ---------------------------------------------------------------

double sample_state_duration(const BehaviorConfig& cfg, DeviceState s,
                             Rng& rng) {
  const auto& dwell = cfg.timing(s).dwell;
  if (dwell.empty()) {
    throw ConfigError(std::string(to_string(s)) + ": no dwell distribution");
  }
  return dwell.sample(rng);
}

std::array<double, kNumStates> modulated_row(const BehaviorConfig& cfg,
                                             DeviceState s, int clock_hour) {
  auto row = cfg.transitions[index_of(s)];
  row[index_of(DeviceState::Activity)] *=
      cfg.diurnal_weights[static_cast<std::size_t>(clock_hour % 24)];
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  if (!(total > 0.0)) {
    throw ConfigError(std::string(to_string(s)) +
                      ": transition row is all zero after diurnal modulation");
  }
  for (double& p : row) p /= total;
  return row;
}

DeviceState next_state(const BehaviorConfig& cfg, DeviceState s,
                       int clock_hour, Rng& rng) {
  const auto row = modulated_row(cfg, s, clock_hour);
  const double u = rng.uniform01();
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < kNumStates; ++i) {
    if (row[i] <= 0.0) continue;
    last_nonzero = i;
    acc += row[i];
    if (u < acc) return static_cast<DeviceState>(i);
  }
  return static_cast<DeviceState>(last_nonzero);
}

std::vector<ScanEvent> schedule_bursts(const BehaviorConfig& cfg,
                                       DeviceState s, double t0, double t1,
                                       Rng& rng) {
  std::vector<ScanEvent> events;
  const auto& timing = cfg.timing(s);
  if (s == DeviceState::Shutdown || timing.scan_interval_s <= 0.0 ||
      !(t1 > t0)) {
    return events;
  }
  const double j = timing.scan_jitter_frac;
  double burst_start = t0 + timing.inter_burst.sample(rng);
  std::uint32_t burst = 0;
  while (burst_start < t1) {
    const auto length =
        static_cast<std::uint32_t>(std::lround(timing.burst_length.sample(rng)));
    double t = burst_start;
    for (std::uint32_t i = 0; i < length && t < t1; ++i) {
      events.push_back({0, t, burst, i, s, i == 0});
      t += timing.intra_burst.sample(rng) + timing.jitter.sample(rng);
    }
    ++burst;
    burst_start += timing.scan_interval_s * (1.0 + rng.uniform(-j, j));
  }
  return events;
}

int clock_hour(double start_clock_s, double t) {
  const double sod = std::fmod(start_clock_s + t, 86400.0);
  return static_cast<int>(std::floor((sod < 0 ? sod + 86400.0 : sod) / 3600.0)) %
         24;
}

FsmTrace run_fsm(const BehaviorConfig& cfg, double horizon,
                 DeviceState start_state, double start_clock_s, Rng& rng) {
  FsmTrace trace;
  if (!(horizon > 0.0)) return trace;
  DeviceState state = start_state;
  double t = 0.0;
  std::uint32_t burst_base = 0;
  while (t < horizon) {
    const double end = std::min(t + sample_state_duration(cfg, state, rng),
                                horizon);
    trace.intervals.push_back({state, t, end});
    auto bursts = schedule_bursts(cfg, state, t, end, rng);
    std::uint32_t used = 0;
    for (auto& e : bursts) {
      e.burst_index += burst_base;
      used = std::max(used, e.burst_index - burst_base + 1);
      trace.events.push_back(e);
    }
    burst_base += used;
    if (end >= horizon) break;
    state = next_state(cfg, state, clock_hour(start_clock_s, end), rng);
    t = end;
  }
  return trace;
}

}  // namespace prsim
