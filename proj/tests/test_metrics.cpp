#include <doctest.h>

#include <map>

#include "prsim/engine.hpp"
#include "prsim/error.hpp"
#include "prsim/metrics.hpp"

using namespace prsim;

namespace {

MacAddress mac_n(int n) {
  return MacAddress{{0x02, 0, 0, 0, 0, static_cast<std::uint8_t>(n)}};
}

ProbeRequestFrame frame_at(double t, int mac) {
  ProbeRequestFrame f;
  f.src = mac_n(mac);
  f.timestamp_us = static_cast<std::int64_t>(std::llround(t * 1e6));
  return f;
}

DeviceProfile one_device(MacPolicy policy) {
  DeviceProfile d;
  d.device_id = 1;
  d.oui = {0xdc, 0xef, 0x09};
  d.true_mac = parse_mac("dc:ef:09:00:00:01");
  d.caps.supported_rates_mbps = {1, 2, 5.5, 11};
  d.mac_policy = policy;
  d.mobility = StaticMobility{{2.0, 0.0}};
  return d;
}

// Device pinned in Activity: bursts every 30 s (+-50%).
ScenarioConfig activity_only(MacPolicy policy, double duration) {
  ScenarioConfig cfg;
  cfg.seed = 5;
  cfg.duration_s = duration;
  cfg.channel.interference_loss_prob = 0.0;
  auto& b = cfg.behaviors["default"];
  for (auto& row : b.transitions) row.fill(0.0);
  for (auto s : kAllStates) b.p(s, DeviceState::Activity) = 1.0;
  b.timing(DeviceState::Activity).dwell = DiscreteDistribution::constant(1e9);
  cfg.devices.push_back(one_device(policy));
  cfg.devices[0].start_state = DeviceState::Activity;
  return cfg;
}

Trace to_trace(ScenarioResult r) {
  return make_trace(std::move(r.frames), std::move(r.records));
}

}  // namespace

TEST_CASE("change events") {
  std::vector<Sighting> same = {{1, mac_n(1)}, {2, mac_n(1)}, {3, mac_n(1)}};
  CHECK(mac_change_events(same).empty());
  std::vector<Sighting> alt = {{1, mac_n(1)}, {2, mac_n(2)}, {3, mac_n(1)}, {4, mac_n(2)}};
  CHECK(mac_change_events(alt) == std::vector<double>{2, 3, 4});
  CHECK(mac_change_events(std::vector<Sighting>{}).empty());
}

TEST_CASE("mrca by definition") {
  const std::vector<double> exact = {0, 300, 600, 900, 1200};
  CHECK(compute_mrca(exact, 300.0) == 1.0);
  const std::vector<double> mixed = {0, 300, 900};  // T then 2T
  CHECK(compute_mrca(mixed, 300.0) == 0.5);
  CHECK_FALSE(compute_mrca(std::vector<double>{5.0}, 300.0).has_value());
  CHECK_FALSE(compute_mrca(std::vector<double>{}, 300.0).has_value());
  // band edges at 10%
  CHECK(compute_mrca(std::vector<double>{0, 330}, 300.0) == 1.0);
  CHECK(compute_mrca(std::vector<double>{0, 331}, 300.0) == 0.0);
  CHECK(compute_mrca(std::vector<double>{0, 331}, 300.0, 0.2) == 1.0);
}

TEST_CASE("mrca against transmission opportunities") {
  // Expiry at 300, but the device is next heard at 340: aligned.
  const std::vector<double> changes = {0, 340};
  const std::vector<double> tx = {0, 100, 200, 340, 400};
  CHECK(compute_mrca(changes, 300.0) == 0.0);
  CHECK(compute_mrca(changes, tx, 300.0) == 1.0);
  // Rotating early is still misaligned.
  CHECK(compute_mrca(std::vector<double>{0, 200}, tx, 300.0) == 0.0);
}

TEST_CASE("mrca is translation invariant") {
  const std::vector<double> c = {10, 305, 620, 1300, 1590};
  std::vector<double> shifted;
  for (double t : c) shifted.push_back(t + 12345.678);
  CHECK(compute_mrca(c, 300.0) == compute_mrca(shifted, 300.0));
}

TEST_CASE("mcr") {
  CHECK(compute_mcr(0, 600.0) == 0.0);
  CHECK(compute_mcr(10, 600.0) == doctest::Approx(1.0));
  std::vector<double> ev = {10, 20, 30, 40};
  CHECK(compute_mcr(ev, 0, 60) == doctest::Approx(4.0));
  // same events in a window twice as long: half the rate
  CHECK(compute_mcr(ev, 0, 120) == doctest::Approx(2.0));
  CHECK(compute_mcr(ev, 15, 35) == doctest::Approx(2 * 60.0 / 20.0));
}

TEST_CASE("numr") {
  std::vector<ProbeRequestFrame> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(frame_at(i, 1));
  CHECK(compute_numr(ten) == 10.0);
  std::vector<ProbeRequestFrame> distinct;
  for (int i = 0; i < 7; ++i) distinct.push_back(frame_at(i, i));
  CHECK(compute_numr(distinct) == 1.0);
  CHECK_FALSE(compute_numr(std::vector<ProbeRequestFrame>{}).has_value());
  // one isolated burst of 3 with a fresh address
  std::vector<ProbeRequestFrame> burst = {frame_at(1.0, 4), frame_at(1.1, 4), frame_at(1.2, 4)};
  CHECK(compute_numr(burst) == 3.0);
}

TEST_CASE("numr is at least one on generated traces") {
  auto cfg = activity_only(MacPolicy::full_per_scan(), 1800);
  cfg.behaviors["default"].timing(DeviceState::Activity).burst_length =
      DiscreteDistribution::constant(3);
  const auto t = to_trace(run_scenario(cfg));
  for (const auto& w : windowed_metrics(t, 600, {})) {
    REQUIRE(w.numr.has_value());
    CHECK(*w.numr >= 1.0);
    CHECK(*w.numr <= 3.0);  // bursts cut by window edges only lower it
  }
}

TEST_CASE("per-scan device: mcr agrees with the engine's rotation log") {
  const auto cfg = activity_only(MacPolicy::full_per_scan(), 600);
  auto r = run_scenario(cfg);
  const auto log = r.device_logs.at(0).mac_changes;
  const double first_frame = r.records.front().timestamp_s();
  const auto t = to_trace(std::move(r));
  std::size_t rotations = 0;
  for (const auto& c : log) rotations += c.t > first_frame;  // first address is not a change on air
  const auto m = windowed_metrics(t, 600, {});
  REQUIRE(m.size() == 1);
  CHECK(m[0].change_count == rotations);
  CHECK(m[0].mcr == doctest::Approx(compute_mcr(rotations, 600)));
  CHECK(m[0].mcr == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("periodic device: change spacing follows the configured period") {
  const auto cfg = activity_only(MacPolicy::periodic(300.0), 3600);
  auto r = run_scenario(cfg);
  const auto log = r.device_logs.at(0).mac_changes;
  const auto t = to_trace(std::move(r));
  const auto tracks = identity_tracks(t);
  REQUIRE(tracks.size() == 1);
  // The initial address is kept until the first expiry, so every logged
  // rotation is seen on air.
  REQUIRE(tracks[0].changes.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(tracks[0].changes[i] == doctest::Approx(log[i].t).epsilon(1e-9));
  }
  CHECK(log.size() >= 10);
  for (std::size_t i = 1; i < tracks[0].changes.size(); ++i) {
    const double gap = tracks[0].changes[i] - tracks[0].changes[i - 1];
    CHECK(gap >= 300.0);
    CHECK(gap <= 300.0 + 45.0);  // next burst at most 1.5 * 30 s after expiry
  }
  const auto mrca = compute_mrca(tracks[0].changes, tracks[0].frame_times, 300.0);
  REQUIRE(mrca.has_value());
  CHECK(*mrca == 1.0);
}

TEST_CASE("periodic device vs an oracle reference schedule") {
  // The reference keeps the simulated transmission times but assigns
  // addresses by the rule itself: rotate at the first burst at or after the
  // previous rotation plus the period.
  const auto cfg = activity_only(MacPolicy::periodic(300.0), 3600);
  auto r = run_scenario(cfg);
  std::vector<ProbeRequestFrame> ref_frames = r.frames;
  std::vector<EmissionRecord> ref_labels = r.records;
  double last_change = 0.0;
  int mac = 0;
  bool started = false;
  for (std::size_t i = 0; i < ref_frames.size(); ++i) {
    const bool burst_start = i == 0 || ref_labels[i].burst_index != ref_labels[i - 1].burst_index;
    const double t = ref_frames[i].timestamp_s();
    if (burst_start && (!started || t >= last_change + 300.0)) {
      ++mac;
      last_change = t;
      started = true;
    }
    ref_frames[i].src = mac_n(mac);
    ref_labels[i].emitted_mac = ref_frames[i].src;
  }
  const auto sim = to_trace(std::move(r));
  const auto ref = make_trace(std::move(ref_frames), std::move(ref_labels));
  const std::vector<double> windows = {600, 1200, 1800, 3600};
  for (const auto& c : compare_traces(sim, ref, windows, {})) {
    REQUIRE(c.relative_deviation.has_value());
    CHECK(*c.relative_deviation < 0.05);
  }
}

TEST_CASE("identical traces compare equal") {
  const auto cfg = activity_only(MacPolicy::periodic(300.0), 3600);
  const auto a = to_trace(run_scenario(cfg));
  const auto b = to_trace(run_scenario(cfg));
  const std::vector<double> windows = {600, 1200, 1800, 3600};
  const auto rows = compare_traces(a, b, windows, {});
  CHECK(rows.size() == 12);
  for (const auto& c : rows) {
    REQUIRE(c.relative_deviation.has_value());
    CHECK(*c.relative_deviation == 0.0);
  }
}

TEST_CASE("relative deviation edge cases") {
  CHECK(relative_deviation(0.0, 0.0) == 0.0);
  CHECK(relative_deviation(1.1, 1.0) == doctest::Approx(0.1));
  CHECK_FALSE(relative_deviation(std::nullopt, 1.0).has_value());
  CHECK_FALSE(relative_deviation(1.0, std::nullopt).has_value());
}

TEST_CASE("windows are half-open and cover the span") {
  std::vector<ProbeRequestFrame> f = {frame_at(0, 1), frame_at(59.999, 1), frame_at(60, 2),
                                      frame_at(130, 3)};
  const auto t = make_trace(f);
  const auto w = windowed_metrics(t, 60, {});
  REQUIRE(w.size() == 3);
  CHECK(w[0].pr_count == 2);
  CHECK(w[1].pr_count == 1);
  CHECK(w[1].change_count == 1);
  CHECK(w[2].pr_count == 1);
  CHECK(w[2].t0 == 120.0);
}

TEST_CASE("labels must line up with the capture") {
  std::vector<ProbeRequestFrame> f = {frame_at(1, 1)};
  EmissionRecord r;
  r.timestamp_us = 1'000'000;
  r.emitted_mac = mac_n(2);
  CHECK_THROWS_AS(make_trace(f, {r}), IoError);
  r.emitted_mac = mac_n(1);
  CHECK_NOTHROW(make_trace(f, {r}));
  CHECK_THROWS_AS(make_trace(f, {r, r}), IoError);
}
