#include "prsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "prsim/error.hpp"

namespace prsim {

void DeviceProfile::validate() const {
  const std::string who = "device " + std::to_string(device_id);
  try {
    caps.validate();
    mac_policy.validate();
    prsim::validate(mobility);
  } catch (const ConfigError& e) {
    throw ConfigError(who + ": " + e.what());
  }
  if (!(ssid_directed_prob >= 0.0 && ssid_directed_prob <= 1.0)) {
    throw ConfigError(who + ": ssid_directed_prob must be in [0, 1]");
  }
  if (true_mac.multicast_bit()) {
    throw ConfigError(who + ": hardware address must be unicast");
  }
}

double parse_clock_of_day(std::string_view iso) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string text(iso);
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h,
                  &mi, &s, &tail) != 6 ||
      text.size() != 19 || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 ||
      h < 0 || mi < 0 || mi > 59 || s < 0 || s > 59) {
    throw ConfigError("start_clock '" + text +
                      "' is not of the form YYYY-MM-DDTHH:MM:SS");
  }
  return h * 3600.0 + mi * 60.0 + s;
}

double ScenarioConfig::start_clock_seconds() const {
  return parse_clock_of_day(start_clock);
}

const BehaviorConfig& ScenarioConfig::behavior_for(
    const DeviceProfile& device) const {
  const auto it = behaviors.find(device.behavior);
  if (it == behaviors.end()) {
    throw ConfigError("device " + std::to_string(device.device_id) +
                      ": unknown behavior '" + device.behavior + "'");
  }
  return it->second;
}

void ScenarioConfig::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (devices.empty()) throw ConfigError("scenario has no devices");
  start_clock_seconds();
  channel.validate();
  for (const auto& [name, behavior] : behaviors) {
    try {
      behavior.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("behavior '" + name + "': " + e.what());
    }
  }
  std::set<std::uint32_t> ids;
  for (const auto& d : devices) {
    if (!ids.insert(d.device_id).second) {
      throw ConfigError("duplicate device_id " + std::to_string(d.device_id));
    }
    d.validate();
    behavior_for(d);
  }
}

std::uint16_t seq_next(std::uint16_t counter, bool mac_changed,
                       bool reset_on_mac_change, Rng& rng) {
  if (mac_changed && reset_on_mac_change) {
    return static_cast<std::uint16_t>(rng.uniform_int(0, 4095));
  }
  return static_cast<std::uint16_t>((counter + 1) & 0x0fff);
}

namespace {

std::vector<Bytes> preferred_networks(Rng& rng) {
  static constexpr std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  const auto count = rng.uniform_int(1, 3);
  std::vector<Bytes> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = rng.uniform_int(6, 20);
    Bytes ssid;
    for (std::uint64_t k = 0; k < len; ++k) {
      ssid.push_back(static_cast<std::uint8_t>(
          alphabet[rng.uniform_int(0, alphabet.size() - 1)]));
    }
    out.push_back(std::move(ssid));
  }
  return out;
}

double quantize_mm(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

DeviceStream simulate_device(const ScenarioConfig& cfg,
                             const DeviceProfile& device) {
  const std::uint32_t id = device.device_id;
  Rng fsm_rng(derive_seed(cfg.seed, id, "fsm"));
  Rng mac_rng(derive_seed(cfg.seed, id, "mac"));
  Rng phy_rng(derive_seed(cfg.seed, id, "phy"));
  Rng ssid_rng(derive_seed(cfg.seed, id, "ssid"));
  Rng seq_rng(derive_seed(cfg.seed, id, "seq"));

  const BehaviorConfig& behavior = cfg.behavior_for(device);
  FsmTrace fsm = run_fsm(behavior, cfg.duration_s, device.start_state,
                         cfg.start_clock_seconds(), fsm_rng);

  DeviceStream out;
  out.device_id = id;
  out.intervals = std::move(fsm.intervals);
  out.frames.reserve(fsm.events.size());

  MacState mac_state = initial_mac_state(device.mac_policy, device.true_mac,
                                         mac_rng);
  auto seq = static_cast<std::uint16_t>(seq_rng.uniform_int(0, 4095));
  const auto networks = preferred_networks(ssid_rng);
  Trajectory trajectory(device.mobility, cfg.seed, id);
  ShadowingProcess shadowing;

  for (const ScanEvent& ev : fsm.events) {
    const MacAddress before = mac_state.current;
    const MacAddress mac = next_mac(device.mac_policy, mac_state, ev.t,
                                    ev.is_burst_start, mac_rng);
    const bool changed = mac != before;
    if (changed) out.mac_changes.push_back({ev.t, mac});
    seq = seq_next(seq, changed, device.seq_reset_on_mac_change, seq_rng);

    const Position pos = trajectory.at(ev.t);
    const double shadow = shadowing.sample(cfg.channel, pos, phy_rng);
    const auto rss = rss_with_shadowing(cfg.channel, distance(pos, {}), shadow,
                                        phy_rng);

    const bool directed = ssid_rng.bernoulli(device.ssid_directed_prob);
    const Bytes* ssid = nullptr;
    if (directed) ssid = &networks[ssid_rng.uniform_int(0, networks.size() - 1)];

    if (!rss) {
      ++out.lost_frames;
      continue;
    }
    const auto t_us = static_cast<std::int64_t>(std::llround(ev.t * 1e6));
    PendingFrame pf;
    pf.frame = build_probe_request(
        device.caps, mac, seq,
        ssid ? std::span<const std::uint8_t>(*ssid)
             : std::span<const std::uint8_t>(),
        *rss, t_us);
    pf.frame.channel_mhz = cfg.channel.channel_mhz;
    pf.record.timestamp_us = t_us;
    pf.record.device_id = id;
    pf.record.state = ev.state;
    pf.record.true_mac = device.true_mac;
    pf.record.emitted_mac = mac;
    pf.record.seq_num = seq;
    pf.record.x_m = quantize_mm(pos.x);
    pf.record.y_m = quantize_mm(pos.y);
    pf.record.rss_dbm = *rss;
    pf.record.burst_index = ev.burst_index;
    pf.frame_index_in_burst = ev.frame_index_in_burst;
    out.frames.push_back(std::move(pf));
  }
  return out;
}

std::vector<PendingFrame> merge_streams(std::span<DeviceStream> streams) {
  struct Head {
    std::int64_t t;
    std::uint32_t device;
    std::uint32_t burst;
    std::uint32_t in_burst;
    std::size_t stream;
    std::size_t pos;
    bool operator>(const Head& o) const {
      return std::tie(t, device, burst, in_burst, stream) >
             std::tie(o.t, o.device, o.burst, o.in_burst, o.stream);
    }
  };
  auto head_of = [&](std::size_t s, std::size_t pos) {
    const auto& pf = streams[s].frames[pos];
    return Head{pf.record.timestamp_us, pf.record.device_id,
                pf.record.burst_index, pf.frame_index_in_burst, s, pos};
  };

  std::size_t total = 0;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    total += streams[s].frames.size();
    if (!streams[s].frames.empty()) heap.push(head_of(s, 0));
  }
  std::vector<PendingFrame> merged;
  merged.reserve(total);
  while (!heap.empty()) {
    const Head h = heap.top();
    heap.pop();
    merged.push_back(std::move(streams[h.stream].frames[h.pos]));
    if (h.pos + 1 < streams[h.stream].frames.size()) {
      heap.push(head_of(h.stream, h.pos + 1));
    }
  }
  return merged;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, unsigned workers) {
  cfg.validate();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.devices.size()));

  std::vector<DeviceStream> streams(cfg.devices.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.devices.size(); i = next++) {
      try {
        streams[i] = simulate_device(cfg, cfg.devices[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  ScenarioResult result;
  std::vector<PendingFrame> merged = merge_streams(streams);
  result.frames.reserve(merged.size());
  result.records.reserve(merged.size());
  std::uint64_t index = 0;
  for (auto& pf : merged) {
    pf.record.frame_index = index++;
    result.frames.push_back(std::move(pf.frame));
    result.records.push_back(pf.record);
  }

  SummaryStats& st = result.stats;
  st.devices = cfg.devices.size();
  st.frames = result.records.size();
  std::unordered_set<MacAddress> all_macs;
  std::unordered_set<MacAddress> randomized;
  std::unordered_set<std::uint32_t> real;
  std::vector<bool> randomizing(cfg.devices.size());
  std::map<std::uint32_t, std::size_t> slot;
  for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
    slot[cfg.devices[i].device_id] = i;
    randomizing[i] = cfg.devices[i].mac_policy.kind != MacPolicyKind::None;
  }
  for (const auto& r : result.records) {
    all_macs.insert(r.emitted_mac);
    if (randomizing[slot[r.device_id]]) randomized.insert(r.emitted_mac);
    if (r.emitted_mac == r.true_mac) real.insert(r.device_id);
    ++st.frames_per_state[index_of(r.state)];
  }
  st.distinct_emitted_macs = all_macs.size();
  st.randomized_macs = randomized.size();
  st.real_macs = real.size();
  for (auto& s : streams) {
    st.lost_frames += s.lost_frames;
    s.frames.clear();
    s.frames.shrink_to_fit();
  }
  result.device_logs = std::move(streams);
  return result;
}

}  // namespace prsim
