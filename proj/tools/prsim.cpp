#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prsim/counting.hpp"
#include "prsim/error.hpp"
#include "prsim/metrics.hpp"
#include "prsim/scenario.hpp"
#include "prsim/traceio.hpp"
#include "prsim/version.hpp"

namespace fs = std::filesystem;
using namespace prsim;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(std::string_view kind, const std::string& msg, int code) {
  std::cerr << "error: " << kind << ": " << one_line(msg) << "\n";
  return code;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("PRSIM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t out = 0;
  const std::string s(v);
  std::size_t used = 0;
  try {
    out = std::stoull(s, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s[0] == '-') {
    throw UsageError("PRSIM_SEED is not an unsigned integer: '" + s + "'");
  }
  return out;
}

// --seed wins over PRSIM_SEED.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  return env_seed();
}

void print_seed(std::optional<std::uint64_t> seed) {
  if (seed) {
    std::cerr << "seed=" << *seed << "\n";
  } else {
    std::cerr << "seed=none\n";
  }
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string{};
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

Trace load_trace(const std::string& pcap, const std::string& labels) {
  auto frames = read_probe_requests(pcap);
  std::vector<EmissionRecord> recs;
  if (!labels.empty()) recs = read_labels(fs::path(labels));
  return make_trace(std::move(frames), std::move(recs));
}

std::vector<double> parse_windows(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0)) {
      throw UsageError("bad window '" + item + "' in --windows");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--windows is empty");
  return out;
}

// ---- generate

struct GenerateArgs {
  std::string config;
  std::string preset;
  std::string out_pcap;
  std::string out_labels;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.config.empty() == a.preset.empty()) {
    throw UsageError("give exactly one of --config and --preset");
  }
  const auto seed = resolve_seed(a.seed);
  const ScenarioConfig cfg = a.preset.empty()
                                 ? load_scenario_file(a.config, seed)
                                 : load_scenario(find_preset(a.preset).json, seed);
  print_seed(cfg.seed);

  const auto result = run_scenario(cfg, a.workers);
  const auto records = frames_to_records(result.frames);
  const Bytes pcap = encode_pcap(records);
  write_file(a.out_pcap, pcap);
  write_labels(result.records, fs::path(a.out_labels));

  // Read both files back before declaring success.
  const Bytes pcap_back = read_file(a.out_pcap);
  const Bytes labels_back = read_file(a.out_labels);
  if (pcap_back != pcap) throw IoError("pcap read-back mismatch: " + a.out_pcap);
  const auto back = read_labels(fs::path(a.out_labels));
  if (back != result.records) {
    throw IoError("labels read-back mismatch: " + a.out_labels);
  }

  nlohmann::ordered_json m;
  m["tool"] = "prsim";
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  m["config"] = nlohmann::ordered_json::parse(scenario_to_json(cfg));
  m["outputs"]["pcap"] = {{"file", fs::path(a.out_pcap).filename().string()},
                          {"bytes", pcap.size()},
                          {"frames", records.size()},
                          {"digest", digest_hex(pcap)}};
  m["outputs"]["labels"] = {{"file", fs::path(a.out_labels).filename().string()},
                            {"bytes", labels_back.size()},
                            {"rows", back.size()},
                            {"digest", digest_hex(labels_back)}};
  const auto& s = result.stats;
  m["stats"] = {{"devices", s.devices},
                {"frames", s.frames},
                {"lost_frames", s.lost_frames},
                {"distinct_macs", s.distinct_emitted_macs},
                {"randomized_macs", s.randomized_macs},
                {"real_macs", s.real_macs}};
  const std::string manifest_path =
      a.manifest.empty() ? a.out_pcap + ".manifest.json" : a.manifest;
  const std::string text = m.dump(2) + "\n";
  write_file(manifest_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                      text.size()));

  std::cout << "frames=" << s.frames << " devices=" << s.devices
            << " randomized_macs=" << s.randomized_macs
            << " real_macs=" << s.real_macs << " pcap=" << a.out_pcap
            << " labels=" << a.out_labels << " manifest=" << manifest_path
            << "\n";
  return 0;
}

// ---- inspect

struct InspectArgs {
  std::string pcap;
  std::string labels;
  std::size_t offset = 0;
  std::size_t limit = 20;
};

std::string ssid_info(const ProbeRequestFrame& f) {
  if (f.wildcard()) return "SSID=Wildcard";
  std::string s(f.ssid.begin(), f.ssid.end());
  if (s.size() > 6) s = s.substr(0, 6) + "...";
  return "SSID=\"" + s + "\"";
}

int cmd_inspect(const InspectArgs& a) {
  print_seed(env_seed());
  const auto file = read_pcap(a.pcap);
  const auto frames = records_to_frames(file.records);
  std::vector<EmissionRecord> labels;
  if (!a.labels.empty()) {
    labels = read_labels(fs::path(a.labels));
    make_trace(frames, labels);  // alignment check only
  }
  std::printf("%-8s %-10s %-18s %-10s %-6s %-5s %s%s\n", "No.", "Time(s)",
              "Source", "Dest.", "Prot.", "Len.", "Info",
              labels.empty() ? "" : "  [device,state]");
  const std::size_t end = std::min(frames.size(), a.offset + a.limit);
  for (std::size_t i = a.offset; i < end; ++i) {
    const auto& f = frames[i];
    const std::string dst = f.dst.is_broadcast() ? "Broadcast" : f.dst.to_string();
    std::string extra;
    if (!labels.empty()) {
      extra = "  [" + std::to_string(labels[i].device_id) + "," +
              std::string(to_string(labels[i].state)) + "]";
    }
    std::printf("%-8zu %-10.4f %-18s %-10s %-6s %-5zu Probe Req, SN=%u, RSS=%ddBm, %s%s\n",
                i + 1, f.timestamp_s(), f.src.to_string().c_str(), dst.c_str(),
                "802.11", encode_capture(f).size(), f.seq_num, f.rss_dbm,
                ssid_info(f).c_str(), extra.c_str());
  }
  std::printf("# frames=%zu shown=%zu\n", frames.size(),
              end > a.offset ? end - a.offset : 0);
  return 0;
}

// ---- metrics

struct MetricsArgs {
  std::string pcap;
  std::string labels;
  std::string ref_pcap;
  std::string ref_labels;
  std::string windows = "600,1200,1800,3600";
  double expected_period = 300.0;
  double tolerance = 0.10;
  bool no_opportunity = false;
  std::string out;
};

int cmd_metrics(const MetricsArgs& a) {
  print_seed(env_seed());
  if (!a.ref_labels.empty() && a.ref_pcap.empty()) {
    throw UsageError("--ref-labels needs --ref-pcap");
  }
  const auto windows = parse_windows(a.windows);
  MetricOptions opt;
  opt.expected_period_s = a.expected_period;
  opt.tolerance_frac = a.tolerance;
  opt.opportunity_aware = !a.no_opportunity;
  const Trace trace = load_trace(a.pcap, a.labels);

  std::ofstream file;
  std::ostream& out = open_out(a.out, file);
  out << "window_s,windows,metric,value,reference,relative_deviation\n";
  if (!a.ref_pcap.empty()) {
    const Trace ref = load_trace(a.ref_pcap, a.ref_labels);
    const auto rows = compare_traces(trace, ref, windows, opt);
    for (const auto& r : rows) {
      const auto n = windowed_metrics(trace, r.window_s, opt).size();
      out << fmt(r.window_s, 0) << "," << n << "," << r.metric << ","
          << fmt_opt(r.a) << "," << fmt_opt(r.b) << ","
          << fmt_opt(r.relative_deviation) << "\n";
    }
  } else {
    for (double w : windows) {
      const auto series = windowed_metrics(trace, w, opt);
      const auto agg = aggregate(series, w);
      const std::string head = fmt(w, 0) + "," + std::to_string(agg.windows) + ",";
      out << head << "mrca," << fmt_opt(agg.mrca) << ",,\n";
      out << head << "mcr," << fmt(agg.mcr) << ",,\n";
      out << head << "numr," << fmt_opt(agg.numr) << ",,\n";
    }
  }
  out.flush();
  if (!out) throw IoError("write failed: " + a.out);
  return 0;
}

// ---- evaluate

struct EvaluateArgs {
  std::string pcap;
  std::string labels;
  std::string method;
  double window = 40.0;
  std::optional<double> stride;
  CountingParams params;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  print_seed(env_seed());
  const Trace trace = load_trace(a.pcap, a.labels);
  const auto est = make_estimator(a.method, a.params);
  const auto rep = evaluate(a.method, est, trace, a.window, a.stride.value_or(a.window));

  std::ofstream file;
  std::ostream& out = open_out(a.out, file);
  out << "t0,t1,estimated,truth,within_tolerance\n";
  for (const auto& w : rep.windows) {
    out << fmt(w.t0, 3) << "," << fmt(w.t1, 3) << "," << w.estimated << ","
        << w.truth << "," << (within_tolerance(w.estimated, w.truth) ? 1 : 0)
        << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed: " + a.out);
  std::cout << "# method=" << rep.method << " windows=" << rep.windows.size()
            << " acc=" << fmt(rep.acc, 4) << " mae=" << fmt(rep.mae, 4)
            << " mse=" << fmt(rep.mse, 4) << "\n";
  return 0;
}

// ---- presets

int cmd_presets_list() {
  print_seed(env_seed());
  for (const auto& p : presets()) std::cout << p.name << "\t" << p.description << "\n";
  return 0;
}

int cmd_presets_show(const std::string& name) {
  print_seed(env_seed());
  std::cout << find_preset(name).json;
  return 0;
}

int cmd_presets_write(const std::string& name, const std::string& path) {
  print_seed(env_seed());
  const auto& json = find_preset(name).json;
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(json.data()),
                             json.size()));
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prsim: WiFi probe request trace simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "simulate a scenario to pcap + labels");
  g->add_option("--config", gen.config, "scenario file")->check(CLI::ExistingFile);
  g->add_option("--preset", gen.preset, "built-in scenario instead of --config");
  g->add_option("--out-pcap", gen.out_pcap)->required();
  g->add_option("--out-labels", gen.out_labels)->required();
  g->add_option("--manifest", gen.manifest, "default: <out-pcap>.manifest.json");
  g->add_option("--seed", gen.seed, "overrides the file seed and PRSIM_SEED");
  g->add_option("--workers", gen.workers, "0 = hardware threads")->capture_default_str();

  InspectArgs ins;
  auto* i = app.add_subcommand("inspect", "print frames as a table");
  i->add_option("--pcap", ins.pcap)->required()->check(CLI::ExistingFile);
  i->add_option("--labels", ins.labels)->check(CLI::ExistingFile);
  i->add_option("--offset", ins.offset)->capture_default_str();
  i->add_option("--limit", ins.limit)->capture_default_str();

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "MRCA, MCR and NUMR per window size (CSV)");
  m->add_option("--pcap", met.pcap)->required()->check(CLI::ExistingFile);
  m->add_option("--labels", met.labels)->check(CLI::ExistingFile);
  m->add_option("--ref-pcap", met.ref_pcap, "reference trace to compare against")
      ->check(CLI::ExistingFile);
  m->add_option("--ref-labels", met.ref_labels)->check(CLI::ExistingFile);
  m->add_option("--windows", met.windows, "window sizes in seconds")->capture_default_str();
  m->add_option("--expected-period", met.expected_period)
      ->capture_default_str()->check(CLI::PositiveNumber);
  m->add_option("--tolerance", met.tolerance, "MRCA band as a fraction of the period")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  m->add_flag("--no-opportunity", met.no_opportunity,
              "score rotations against expiry time instead of the next transmission");
  m->add_option("--out", met.out, "CSV file (default stdout)");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "score a device counting method (CSV)");
  e->add_option("--pcap", ev.pcap)->required()->check(CLI::ExistingFile);
  e->add_option("--labels", ev.labels)->required()->check(CLI::ExistingFile);
  e->add_option("--method", ev.method)
      ->required()->check(CLI::IsMember({"iecluster", "ietime", "timerss", "oracle"}));
  e->add_option("--window", ev.window)->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--stride", ev.stride, "default: window")->check(CLI::PositiveNumber);
  e->add_option("--eps", ev.params.ietime_eps, "ietime")->capture_default_str();
  e->add_option("--min-pts", ev.params.ietime_min_pts, "ietime")->capture_default_str();
  e->add_option("--rss-gap", ev.params.rss_gap_db, "timerss, dB")->capture_default_str();
  e->add_option("--time-gap", ev.params.time_gap_s, "timerss, s")->capture_default_str();
  e->add_option("--min-gap", ev.params.min_gap_s, "timerss, s")->capture_default_str();
  e->add_option("--out", ev.out, "CSV file (default stdout)");

  auto* p = app.add_subcommand("presets", "built-in scenarios");
  p->require_subcommand(1);
  auto* pl = p->add_subcommand("list");
  std::string preset_name;
  std::string preset_path;
  auto* ps = p->add_subcommand("show");
  ps->add_option("name", preset_name)->required();
  auto* pw = p->add_subcommand("write");
  pw->add_option("name", preset_name)->required();
  pw->add_option("path", preset_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return fail("usage", ex.what(), 2);
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*i) return cmd_inspect(ins);
    if (*m) return cmd_metrics(met);
    if (*e) return cmd_evaluate(ev);
    if (*pl) return cmd_presets_list();
    if (*ps) return cmd_presets_show(preset_name);
    if (*pw) return cmd_presets_write(preset_name, preset_path);
  } catch (const UsageError& ex) {
    return fail("usage", ex.what(), 2);
  } catch (const ConfigError& ex) {
    return fail("config", ex.what(), 3);
  } catch (const ParseError& ex) {
    return fail("parse", ex.what(), 5);
  } catch (const IoError& ex) {
    return fail("io", ex.what(), 4);
  } catch (const std::exception& ex) {
    return fail("internal", ex.what(), 1);
  }
  return fail("usage", "no command", 2);
}
