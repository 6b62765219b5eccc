#include "prsim/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <span>

#include <json.hpp>

#include "prsim/error.hpp"
#include "prsim/traceio.hpp"

namespace prsim {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

void check_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
}

void check_keys(const json& j, std::span<const std::string_view> allowed,
                const std::string& where) {
  check_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(where, "unknown key '" + key + "'");
    }
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  check_keys(j, std::span<const std::string_view>(allowed.begin(), allowed.size()),
             where);
}

std::string at(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::uint64_t unsigned_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                 j.get<std::int64_t>() < 0)) {
    fail(where, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <typename F>
auto wrap(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    fail(where, e.what());
  } catch (const ParseError& e) {
    fail(where, e.what());
  }
}

DiscreteDistribution distribution(const json& j, const std::string& where) {
  if (j.is_number()) return DiscreteDistribution::constant(number(j, where));
  return wrap(where, [&] { return DiscreteDistribution::parse(text(j, where)); });
}

json distribution_to_json(const DiscreteDistribution& d) {
  if (d.entries().size() == 1) return d.entries()[0].value;
  return d.to_string();
}

// ---- behavior ---------------------------------------------------------------

void apply_timing(StateTiming& t, const json& j, const std::string& where) {
  check_keys(j,
             {"dwell", "scan_interval_s", "scan_jitter_frac", "burst_length",
              "intra_burst", "inter_burst", "jitter"},
             where);
  if (j.contains("dwell")) t.dwell = distribution(j["dwell"], at(where, "dwell"));
  if (j.contains("scan_interval_s")) {
    t.scan_interval_s = number(j["scan_interval_s"], at(where, "scan_interval_s"));
  }
  if (j.contains("scan_jitter_frac")) {
    t.scan_jitter_frac =
        number(j["scan_jitter_frac"], at(where, "scan_jitter_frac"));
  }
  if (j.contains("burst_length")) {
    t.burst_length = distribution(j["burst_length"], at(where, "burst_length"));
  }
  if (j.contains("intra_burst")) {
    t.intra_burst = distribution(j["intra_burst"], at(where, "intra_burst"));
  }
  if (j.contains("inter_burst")) {
    t.inter_burst = distribution(j["inter_burst"], at(where, "inter_burst"));
  }
  if (j.contains("jitter")) t.jitter = distribution(j["jitter"], at(where, "jitter"));
}

DeviceState state_name(const std::string& name, const std::string& where) {
  return wrap(where, [&] { return parse_device_state(name); });
}

BehaviorConfig parse_behavior(const json& j, const std::map<std::string, BehaviorConfig>& done,
                              const std::string& where) {
  check_keys(j, {"base", "states", "transitions", "diurnal_weights"}, where);
  BehaviorConfig cfg = BehaviorConfig::defaults();
  if (j.contains("base")) {
    const auto base = text(j["base"], at(where, "base"));
    const auto it = done.find(base);
    if (it == done.end()) {
      fail(at(where, "base"), "unknown behavior '" + base + "' (define it earlier)");
    }
    cfg = it->second;
  }
  if (j.contains("states")) {
    const auto& states = j["states"];
    check_object(states, at(where, "states"));
    for (const auto& [name, body] : states.items()) {
      const std::string w = at(at(where, "states"), name);
      apply_timing(cfg.timing(state_name(name, w)), body, w);
    }
  }
  if (j.contains("transitions")) {
    const auto& tr = j["transitions"];
    const std::string w = at(where, "transitions");
    if (tr.is_array()) {
      if (tr.size() != kNumStates) fail(w, "expected a 4x4 matrix");
      for (std::size_t r = 0; r < kNumStates; ++r) {
        const auto row = numbers(tr[r], w + "[" + std::to_string(r) + "]");
        if (row.size() != kNumStates) fail(w, "expected a 4x4 matrix");
        std::copy(row.begin(), row.end(), cfg.transitions[r].begin());
      }
    } else {
      check_object(tr, w);
      for (const auto& [from, row] : tr.items()) {
        const std::string wr = at(w, from);
        auto& target = cfg.transitions[index_of(state_name(from, wr))];
        check_object(row, wr);
        target.fill(0.0);
        for (const auto& [to, p] : row.items()) {
          target[index_of(state_name(to, at(wr, to)))] = number(p, at(wr, to));
        }
      }
    }
  }
  if (j.contains("diurnal_weights")) {
    const auto w = numbers(j["diurnal_weights"], at(where, "diurnal_weights"));
    if (w.size() != 24) fail(at(where, "diurnal_weights"), "expected 24 values");
    std::copy(w.begin(), w.end(), cfg.diurnal_weights.begin());
  }
  wrap(where, [&] { cfg.validate(); });
  return cfg;
}

json behavior_to_json(const BehaviorConfig& cfg) {
  json states = json::object();
  for (auto s : kAllStates) {
    const auto& t = cfg.timing(s);
    json o;
    o["dwell"] = distribution_to_json(t.dwell);
    o["scan_interval_s"] = t.scan_interval_s;
    o["scan_jitter_frac"] = t.scan_jitter_frac;
    o["burst_length"] = distribution_to_json(t.burst_length);
    o["intra_burst"] = distribution_to_json(t.intra_burst);
    o["inter_burst"] = distribution_to_json(t.inter_burst);
    o["jitter"] = distribution_to_json(t.jitter);
    states[std::string(to_string(s))] = o;
  }
  json transitions = json::array();
  for (const auto& row : cfg.transitions) transitions.push_back(row);
  return json{{"states", states},
              {"transitions", transitions},
              {"diurnal_weights", cfg.diurnal_weights}};
}

// ---- channel ----------------------------------------------------------------

ChannelModel parse_channel(const json& j, const std::string& where) {
  check_keys(j,
             {"tx_power_dbm", "pl_d0_db", "d0_m", "exponent", "shadow_sigma_db",
              "shadow_decorrelation_m", "fading", "interference_loss_prob",
              "rss_floor_dbm", "channel_mhz"},
             where);
  ChannelModel m;
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = number(j[key], at(where, key));
  };
  num("tx_power_dbm", m.tx_power_dbm);
  num("pl_d0_db", m.pl_d0_db);
  num("d0_m", m.d0_m);
  num("exponent", m.exponent);
  num("shadow_sigma_db", m.shadow_sigma_db);
  num("shadow_decorrelation_m", m.shadow_decorrelation_m);
  num("interference_loss_prob", m.interference_loss_prob);
  num("rss_floor_dbm", m.rss_floor_dbm);
  if (j.contains("channel_mhz")) {
    const auto mhz = unsigned_int(j["channel_mhz"], at(where, "channel_mhz"));
    if (mhz > 0xffff) fail(at(where, "channel_mhz"), "out of range");
    m.channel_mhz = static_cast<std::uint16_t>(mhz);
  }
  if (j.contains("fading")) {
    const auto& f = j["fading"];
    const std::string w = at(where, "fading");
    if (f.is_string()) {
      const auto kind = f.get<std::string>();
      if (kind == "none") {
        m.fading = std::monostate{};
      } else if (kind == "rayleigh") {
        m.fading = RayleighFading{};
      } else if (kind == "rician") {
        m.fading = RicianFading{};
      } else {
        fail(w, "expected none, rayleigh, rician or {\"rician_k_db\": K}");
      }
    } else {
      check_keys(f, {"rician_k_db"}, w);
      if (!f.contains("rician_k_db")) fail(w, "missing rician_k_db");
      m.fading = RicianFading{number(f["rician_k_db"], at(w, "rician_k_db"))};
    }
  }
  wrap(where, [&] { m.validate(); });
  return m;
}

json channel_to_json(const ChannelModel& m) {
  json fading;
  if (std::holds_alternative<std::monostate>(m.fading)) {
    fading = "none";
  } else if (std::holds_alternative<RayleighFading>(m.fading)) {
    fading = "rayleigh";
  } else {
    fading = json{{"rician_k_db", std::get<RicianFading>(m.fading).k_db}};
  }
  return json{{"tx_power_dbm", m.tx_power_dbm},
              {"pl_d0_db", m.pl_d0_db},
              {"d0_m", m.d0_m},
              {"exponent", m.exponent},
              {"shadow_sigma_db", m.shadow_sigma_db},
              {"shadow_decorrelation_m", m.shadow_decorrelation_m},
              {"fading", fading},
              {"interference_loss_prob", m.interference_loss_prob},
              {"rss_floor_dbm", m.rss_floor_dbm},
              {"channel_mhz", m.channel_mhz}};
}

// ---- devices ----------------------------------------------------------------

struct PolicySpec {
  MacPolicyKind kind = MacPolicyKind::FullPerScan;
  double period_s = 0.0;
  std::optional<Oui> oui;  // OuiPreserving; defaults to the device OUI
};

PolicySpec parse_policy(const json& j, const std::string& where) {
  PolicySpec p;
  if (j.is_string()) {
    p.kind = wrap(where, [&] { return parse_policy_kind(j.get<std::string>()); });
  } else {
    check_keys(j, {"kind", "period_s", "oui"}, where);
    if (!j.contains("kind")) fail(where, "missing kind");
    p.kind = wrap(where, [&] { return parse_policy_kind(text(j["kind"], at(where, "kind"))); });
    if (j.contains("period_s")) p.period_s = number(j["period_s"], at(where, "period_s"));
    if (j.contains("oui")) {
      p.oui = wrap(at(where, "oui"), [&] { return parse_oui(text(j["oui"], at(where, "oui"))); });
    }
  }
  if (p.kind == MacPolicyKind::Periodic && !(p.period_s > 0.0)) {
    fail(where, "periodic policy needs a positive period_s");
  }
  return p;
}

MacPolicy resolve_policy(const PolicySpec& spec, const Oui& device_oui) {
  MacPolicy p;
  p.kind = spec.kind;
  p.period_s = spec.kind == MacPolicyKind::Periodic ? spec.period_s : 0.0;
  if (spec.kind == MacPolicyKind::OuiPreserving) p.base_oui = spec.oui.value_or(device_oui);
  return p;
}

json policy_to_json(const MacPolicy& p) {
  json o{{"kind", std::string(to_string(p.kind))}};
  if (p.kind == MacPolicyKind::Periodic) o["period_s"] = p.period_s;
  if (p.kind == MacPolicyKind::OuiPreserving) o["oui"] = oui_to_string(p.base_oui);
  return o;
}

/// Attributes shared by templates, population groups and explicit devices.
/// Unset fields fall through to the next layer.
struct ProfileFields {
  std::optional<std::string> vendor;
  std::optional<std::string> model;
  std::optional<Oui> oui;
  std::optional<std::vector<double>> rates;
  std::optional<std::vector<double>> ext_rates;
  std::optional<Bytes> ht_cap;
  std::optional<Bytes> vht_cap;
  std::optional<Bytes> ext_cap;
  std::optional<std::vector<InformationElement>> vendor_ies;
  std::optional<PolicySpec> policy;
  std::optional<std::string> behavior;
  std::optional<double> ssid_directed_prob;
  std::optional<bool> seq_reset;

  void overlay(const ProfileFields& o) {
    auto take = [](auto& dst, const auto& src) {
      if (src) dst = src;
    };
    take(vendor, o.vendor);
    take(model, o.model);
    take(oui, o.oui);
    take(rates, o.rates);
    take(ext_rates, o.ext_rates);
    take(ht_cap, o.ht_cap);
    take(vht_cap, o.vht_cap);
    take(ext_cap, o.ext_cap);
    take(vendor_ies, o.vendor_ies);
    take(policy, o.policy);
    take(behavior, o.behavior);
    take(ssid_directed_prob, o.ssid_directed_prob);
    take(seq_reset, o.seq_reset);
  }
};

constexpr std::array<std::string_view, 13> kProfileKeys = {
    "vendor",      "model",      "oui",         "rates",
    "ext_rates",   "ht_cap",     "vht_cap",     "ext_cap",
    "vendor_ies",  "mac_policy", "behavior",    "ssid_directed_prob",
    "seq_reset_on_mac_change"};

Bytes hex_field(const json& j, const std::string& where) {
  return wrap(where, [&] { return parse_hex(text(j, where)); });
}

ProfileFields parse_profile_fields(const json& j, const std::string& where) {
  ProfileFields f;
  if (j.contains("vendor")) f.vendor = text(j["vendor"], at(where, "vendor"));
  if (j.contains("model")) f.model = text(j["model"], at(where, "model"));
  if (j.contains("oui")) {
    f.oui = wrap(at(where, "oui"), [&] { return parse_oui(text(j["oui"], at(where, "oui"))); });
  }
  if (j.contains("rates")) f.rates = numbers(j["rates"], at(where, "rates"));
  if (j.contains("ext_rates")) f.ext_rates = numbers(j["ext_rates"], at(where, "ext_rates"));
  if (j.contains("ht_cap")) f.ht_cap = hex_field(j["ht_cap"], at(where, "ht_cap"));
  if (j.contains("vht_cap")) f.vht_cap = hex_field(j["vht_cap"], at(where, "vht_cap"));
  if (j.contains("ext_cap")) f.ext_cap = hex_field(j["ext_cap"], at(where, "ext_cap"));
  if (j.contains("vendor_ies")) {
    const auto& arr = j["vendor_ies"];
    const std::string w = at(where, "vendor_ies");
    if (!arr.is_array()) fail(w, "expected an array");
    std::vector<InformationElement> ies;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string wi = w + "[" + std::to_string(i) + "]";
      if (arr[i].is_string()) {
        ies.push_back({ie_tag::kVendorSpecific, hex_field(arr[i], wi)});
      } else {
        check_keys(arr[i], {"tag", "hex"}, wi);
        if (!arr[i].contains("tag") || !arr[i].contains("hex")) fail(wi, "needs tag and hex");
        const auto tag = unsigned_int(arr[i]["tag"], at(wi, "tag"));
        if (tag > 255) fail(at(wi, "tag"), "out of range");
        ies.push_back({static_cast<std::uint8_t>(tag), hex_field(arr[i]["hex"], at(wi, "hex"))});
      }
    }
    f.vendor_ies = std::move(ies);
  }
  if (j.contains("mac_policy")) f.policy = parse_policy(j["mac_policy"], at(where, "mac_policy"));
  if (j.contains("behavior")) f.behavior = text(j["behavior"], at(where, "behavior"));
  if (j.contains("ssid_directed_prob")) {
    f.ssid_directed_prob = number(j["ssid_directed_prob"], at(where, "ssid_directed_prob"));
  }
  if (j.contains("seq_reset_on_mac_change")) {
    f.seq_reset = boolean(j["seq_reset_on_mac_change"], at(where, "seq_reset_on_mac_change"));
  }
  return f;
}

struct MobilitySpec {
  enum class Kind { Fixed, Placed, Waypoint } kind = Kind::Placed;
  Position pos;
  Area area;
  double speed_min = 0.5;
  double speed_max = 1.5;
  DiscreteDistribution pause = DiscreteDistribution::constant(0.0);
};

Area parse_area(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.size() != 4) fail(where, "expected [x0, y0, x1, y1]");
  Area a{v[0], v[1], v[2], v[3]};
  if (!(a.x1 > a.x0 && a.y1 > a.y0)) fail(where, "empty area");
  return a;
}

MobilitySpec parse_mobility(const json& j, const std::string& where) {
  check_keys(j, {"kind", "pos", "area", "speed_mps", "pause_s"}, where);
  MobilitySpec m;
  const std::string kind = j.contains("kind") ? text(j["kind"], at(where, "kind")) : "static";
  if (kind == "static") {
    if (j.contains("speed_mps") || j.contains("pause_s")) {
      fail(where, "static mobility takes pos or area only");
    }
    if (j.contains("pos") && j.contains("area")) fail(where, "give pos or area, not both");
    if (j.contains("pos")) {
      const auto p = numbers(j["pos"], at(where, "pos"));
      if (p.size() != 2) fail(at(where, "pos"), "expected [x, y]");
      m.kind = MobilitySpec::Kind::Fixed;
      m.pos = {p[0], p[1]};
    } else {
      m.kind = MobilitySpec::Kind::Placed;
      if (j.contains("area")) m.area = parse_area(j["area"], at(where, "area"));
    }
  } else if (kind == "random_waypoint") {
    if (j.contains("pos")) fail(where, "random_waypoint takes area, speed_mps and pause_s");
    m.kind = MobilitySpec::Kind::Waypoint;
    if (j.contains("area")) m.area = parse_area(j["area"], at(where, "area"));
    if (j.contains("speed_mps")) {
      const auto s = numbers(j["speed_mps"], at(where, "speed_mps"));
      if (s.size() != 2) fail(at(where, "speed_mps"), "expected [min, max]");
      m.speed_min = s[0];
      m.speed_max = s[1];
    }
    if (j.contains("pause_s")) m.pause = distribution(j["pause_s"], at(where, "pause_s"));
  } else {
    fail(at(where, "kind"), "expected static or random_waypoint");
  }
  return m;
}

MobilityModel resolve_mobility(const MobilitySpec& spec, Rng& placement) {
  switch (spec.kind) {
    case MobilitySpec::Kind::Fixed:
      return StaticMobility{spec.pos};
    case MobilitySpec::Kind::Placed:
      return StaticMobility{spec.area.sample(placement)};
    case MobilitySpec::Kind::Waypoint:
      return RandomWaypointMobility{spec.area, spec.speed_min, spec.speed_max, spec.pause};
  }
  return StaticMobility{};
}

json mobility_to_json(const MobilityModel& m) {
  if (const auto* s = std::get_if<StaticMobility>(&m)) {
    return json{{"kind", "static"}, {"pos", {s->pos.x, s->pos.y}}};
  }
  const auto& rw = std::get<RandomWaypointMobility>(m);
  return json{{"kind", "random_waypoint"},
              {"area", {rw.area.x0, rw.area.y0, rw.area.x1, rw.area.y1}},
              {"speed_mps", {rw.speed_min_mps, rw.speed_max_mps}},
              {"pause_s", distribution_to_json(rw.pause_s)}};
}

/// Weighted choice among named options, as written in the file (insertion
/// order is preserved so sampling is reproducible).
struct WeightedNames {
  std::vector<std::pair<std::string, double>> options;

  const std::string& sample(Rng& rng) const {
    double total = 0.0;
    for (const auto& o : options) total += o.second;
    double u = rng.uniform01() * total;
    for (const auto& o : options) {
      if (u < o.second) return o.first;
      u -= o.second;
    }
    return options.back().first;
  }
};

WeightedNames parse_weighted(const json& j, const std::string& where) {
  WeightedNames w;
  if (j.is_string()) {
    w.options.push_back({j.get<std::string>(), 1.0});
    return w;
  }
  check_object(j, where);
  for (const auto& [name, weight] : j.items()) {
    const double v = number(weight, at(where, name));
    if (v < 0.0) fail(at(where, name), "weight must be non-negative");
    if (v > 0.0) w.options.push_back({name, v});
  }
  if (w.options.empty()) fail(where, "needs at least one positive weight");
  return w;
}

DeviceProfile build_device(std::uint32_t id, const std::string& template_name,
                           const ProfileFields& f, const std::string& where) {
  DeviceProfile d;
  d.device_id = id;
  d.template_name = template_name;
  d.vendor = f.vendor.value_or("");
  d.model = f.model.value_or("");
  if (!f.oui) fail(where, "no oui (set it on the template or the device)");
  d.oui = *f.oui;
  if (f.rates) d.caps.supported_rates_mbps = *f.rates;
  if (f.ext_rates) d.caps.ext_rates_mbps = *f.ext_rates;
  if (f.ht_cap) d.caps.ht_cap = *f.ht_cap;
  if (f.vht_cap) d.caps.vht_cap = *f.vht_cap;
  if (f.ext_cap) d.caps.ext_cap = *f.ext_cap;
  if (f.vendor_ies) d.caps.vendor_ies = *f.vendor_ies;
  d.mac_policy = resolve_policy(f.policy.value_or(PolicySpec{}), d.oui);
  d.behavior = f.behavior.value_or("default");
  d.ssid_directed_prob = f.ssid_directed_prob.value_or(0.1);
  d.seq_reset_on_mac_change = f.seq_reset.value_or(false);
  return d;
}

MacAddress hardware_address(const Oui& oui, Rng& rng) {
  MacAddress m;
  m.octets = {oui[0], oui[1], oui[2], 0, 0, 0};
  const std::uint64_t nic = rng.next_u64();
  m.octets[3] = static_cast<std::uint8_t>(nic >> 16);
  m.octets[4] = static_cast<std::uint8_t>(nic >> 8);
  m.octets[5] = static_cast<std::uint8_t>(nic);
  return m;
}

DeviceState sample_state(const WeightedNames& w, Rng& rng, const std::string& where) {
  return state_name(w.sample(rng), where);
}

}  // namespace

ScenarioConfig load_scenario(std::string_view json_text,
                             std::optional<std::uint64_t> seed_override) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"name", "description", "seed", "duration_s", "start_clock",
              "channel", "behaviors", "templates", "population", "devices"},
             "");

  ScenarioConfig cfg;
  if (root.contains("name")) cfg.name = text(root["name"], "name");
  if (root.contains("seed")) cfg.seed = unsigned_int(root["seed"], "seed");
  if (seed_override) cfg.seed = *seed_override;
  if (root.contains("duration_s")) cfg.duration_s = number(root["duration_s"], "duration_s");
  if (root.contains("start_clock")) {
    cfg.start_clock = text(root["start_clock"], "start_clock");
    wrap("start_clock", [&] { parse_clock_of_day(cfg.start_clock); });
  }
  if (root.contains("channel")) cfg.channel = parse_channel(root["channel"], "channel");

  if (root.contains("behaviors")) {
    const auto& b = root["behaviors"];
    check_object(b, "behaviors");
    for (const auto& [name, body] : b.items()) {
      cfg.behaviors[name] = parse_behavior(body, cfg.behaviors, at("behaviors", name));
    }
  }

  std::map<std::string, ProfileFields> templates;
  if (root.contains("templates")) {
    const auto& t = root["templates"];
    check_object(t, "templates");
    for (const auto& [name, body] : t.items()) {
      const std::string w = at("templates", name);
      check_keys(body, kProfileKeys, w);
      templates[name] = parse_profile_fields(body, w);
    }
  }
  auto template_fields = [&](const std::string& name, const std::string& where) {
    const auto it = templates.find(name);
    if (it == templates.end()) fail(where, "unknown template '" + name + "'");
    return it->second;
  };

  std::set<std::uint32_t> used_ids;
  std::uint32_t next_id = 1;
  auto claim_id = [&]() {
    while (used_ids.count(next_id)) ++next_id;
    used_ids.insert(next_id);
    return next_id++;
  };

  if (root.contains("devices")) {
    // Explicit ids are reserved first so generated ones never collide.
    const auto& devs = root["devices"];
    if (!devs.is_array()) fail("devices", "expected an array");
    for (std::size_t i = 0; i < devs.size(); ++i) {
      if (devs[i].is_object() && devs[i].contains("device_id")) {
        const std::string w = "devices[" + std::to_string(i) + "].device_id";
        const auto id = unsigned_int(devs[i]["device_id"], w);
        if (id > 0xffffffffULL) fail(w, "out of range");
        if (!used_ids.insert(static_cast<std::uint32_t>(id)).second) {
          fail(w, "duplicate device_id " + std::to_string(id));
        }
      }
    }
  }

  if (root.contains("population")) {
    const auto& pop = root["population"];
    if (!pop.is_array()) fail("population", "expected an array of groups");
    for (std::size_t g = 0; g < pop.size(); ++g) {
      const std::string w = "population[" + std::to_string(g) + "]";
      std::vector<std::string_view> keys = {"count", "templates", "mobility", "start_state"};
      keys.insert(keys.end(), kProfileKeys.begin(), kProfileKeys.end());
      const json& grp = pop[g];
      check_object(grp, w);
      for (const auto& [key, _] : grp.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
          fail(w, "unknown key '" + key + "'");
        }
      }
      if (!grp.contains("count")) fail(w, "missing count");
      if (!grp.contains("templates")) fail(w, "missing templates");
      const auto count = unsigned_int(grp["count"], at(w, "count"));
      const auto mix = parse_weighted(grp["templates"], at(w, "templates"));
      for (const auto& [name, _] : mix.options) template_fields(name, at(w, "templates"));
      const ProfileFields overrides = parse_profile_fields(grp, w);
      const MobilitySpec mobility = grp.contains("mobility")
                                        ? parse_mobility(grp["mobility"], at(w, "mobility"))
                                        : MobilitySpec{};
      const WeightedNames start = grp.contains("start_state")
                                      ? parse_weighted(grp["start_state"], at(w, "start_state"))
                                      : WeightedNames{{{"screen_off", 1.0}}};
      for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint32_t id = claim_id();
        Rng hardware(derive_seed(cfg.seed, id, "hardware"));
        Rng placement(derive_seed(cfg.seed, id, "placement"));
        const std::string& tname = mix.sample(hardware);
        ProfileFields f = template_fields(tname, at(w, "templates"));
        f.overlay(overrides);
        DeviceProfile d = build_device(id, tname, f, w);
        d.true_mac = hardware_address(d.oui, hardware);
        d.mobility = resolve_mobility(mobility, placement);
        d.start_state = sample_state(start, placement, at(w, "start_state"));
        cfg.devices.push_back(std::move(d));
      }
    }
  }

  if (root.contains("devices")) {
    const auto& devs = root["devices"];
    for (std::size_t i = 0; i < devs.size(); ++i) {
      const std::string w = "devices[" + std::to_string(i) + "]";
      const json& dj = devs[i];
      std::vector<std::string_view> keys = {"device_id", "template", "template_name",
                                            "true_mac", "mobility", "start_state"};
      keys.insert(keys.end(), kProfileKeys.begin(), kProfileKeys.end());
      check_object(dj, w);
      for (const auto& [key, _] : dj.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
          fail(w, "unknown key '" + key + "'");
        }
      }
      const std::uint32_t id = dj.contains("device_id")
                                   ? static_cast<std::uint32_t>(dj["device_id"].get<std::uint64_t>())
                                   : claim_id();
      Rng hardware(derive_seed(cfg.seed, id, "hardware"));
      Rng placement(derive_seed(cfg.seed, id, "placement"));
      ProfileFields f;
      std::string tname;
      if (dj.contains("template")) {
        tname = text(dj["template"], at(w, "template"));
        f = template_fields(tname, at(w, "template"));
      }
      if (dj.contains("template_name")) tname = text(dj["template_name"], at(w, "template_name"));
      f.overlay(parse_profile_fields(dj, w));
      DeviceProfile d = build_device(id, tname, f, w);
      if (dj.contains("true_mac")) {
        d.true_mac = wrap(at(w, "true_mac"),
                          [&] { return parse_mac(text(dj["true_mac"], at(w, "true_mac"))); });
      } else {
        d.true_mac = hardware_address(d.oui, hardware);
      }
      const MobilitySpec mobility =
          dj.contains("mobility") ? parse_mobility(dj["mobility"], at(w, "mobility")) : MobilitySpec{};
      d.mobility = resolve_mobility(mobility, placement);
      if (dj.contains("start_state")) {
        d.start_state = sample_state(parse_weighted(dj["start_state"], at(w, "start_state")),
                                     placement, at(w, "start_state"));
      }
      cfg.devices.push_back(std::move(d));
    }
  }

  std::sort(cfg.devices.begin(), cfg.devices.end(),
            [](const DeviceProfile& a, const DeviceProfile& b) {
              return a.device_id < b.device_id;
            });
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path,
                                  std::optional<std::uint64_t> seed_override) {
  Bytes raw;
  try {
    raw = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return load_scenario(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()),
                       seed_override);
}

std::string scenario_to_json(const ScenarioConfig& cfg, int indent) {
  json root;
  root["name"] = cfg.name;
  root["seed"] = cfg.seed;
  root["duration_s"] = cfg.duration_s;
  root["start_clock"] = cfg.start_clock;
  root["channel"] = channel_to_json(cfg.channel);
  json behaviors = json::object();
  for (const auto& [name, b] : cfg.behaviors) behaviors[name] = behavior_to_json(b);
  root["behaviors"] = behaviors;
  json devices = json::array();
  for (const auto& d : cfg.devices) {
    json o;
    o["device_id"] = d.device_id;
    if (!d.template_name.empty()) o["template_name"] = d.template_name;
    o["vendor"] = d.vendor;
    o["model"] = d.model;
    o["oui"] = oui_to_string(d.oui);
    o["true_mac"] = d.true_mac.to_string();
    o["rates"] = d.caps.supported_rates_mbps;
    o["ext_rates"] = d.caps.ext_rates_mbps;
    o["ht_cap"] = to_hex(d.caps.ht_cap);
    o["vht_cap"] = to_hex(d.caps.vht_cap);
    o["ext_cap"] = to_hex(d.caps.ext_cap);
    json ies = json::array();
    for (const auto& ie : d.caps.vendor_ies) {
      ies.push_back(json{{"tag", ie.tag}, {"hex", to_hex(ie.value)}});
    }
    o["vendor_ies"] = ies;
    o["mac_policy"] = policy_to_json(d.mac_policy);
    o["behavior"] = d.behavior;
    o["mobility"] = mobility_to_json(d.mobility);
    o["start_state"] = std::string(to_string(d.start_state));
    o["ssid_directed_prob"] = d.ssid_directed_prob;
    o["seq_reset_on_mac_change"] = d.seq_reset_on_mac_change;
    devices.push_back(o);
  }
  root["devices"] = devices;
  return root.dump(indent);
}

}  // namespace prsim
