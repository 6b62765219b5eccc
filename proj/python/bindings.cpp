#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "prsim/counting.hpp"
#include "prsim/error.hpp"
#include "prsim/metrics.hpp"
#include "prsim/scenario.hpp"
#include "prsim/traceio.hpp"
#include "prsim/version.hpp"

namespace py = pybind11;
using namespace prsim;

namespace {

ScenarioConfig config_from(const std::string& config, std::optional<std::uint64_t> seed) {
  // A preset name or JSON text.
  for (const auto& p : presets()) {
    if (p.name == config) return load_scenario(p.json, seed);
  }
  return load_scenario(config, seed);
}

py::dict stats_dict(const SummaryStats& s, std::uint64_t seed) {
  py::dict d;
  d["seed"] = seed;
  d["devices"] = s.devices;
  d["frames"] = s.frames;
  d["lost_frames"] = s.lost_frames;
  d["distinct_macs"] = s.distinct_emitted_macs;
  d["randomized_macs"] = s.randomized_macs;
  d["real_macs"] = s.real_macs;
  return d;
}

py::dict frame_dict(const ProbeRequestFrame& f) {
  py::dict d;
  d["timestamp_s"] = f.timestamp_s();
  d["src"] = f.src.to_string();
  d["dst"] = f.dst.to_string();
  d["seq_num"] = f.seq_num;
  d["rss_dbm"] = f.rss_dbm;
  d["channel_mhz"] = f.channel_mhz;
  d["ssid"] = py::bytes(std::string(f.ssid.begin(), f.ssid.end()));
  py::list ies;
  for (const auto& ie : f.ies) {
    ies.append(py::make_tuple(ie.tag, py::bytes(std::string(ie.value.begin(), ie.value.end()))));
  }
  d["ies"] = ies;
  return d;
}

py::dict label_dict(const EmissionRecord& r) {
  py::dict d;
  d["frame_index"] = r.frame_index;
  d["timestamp_s"] = r.timestamp_s();
  d["device_id"] = r.device_id;
  d["state"] = std::string(to_string(r.state));
  d["true_mac"] = r.true_mac.to_string();
  d["emitted_mac"] = r.emitted_mac.to_string();
  d["seq_num"] = r.seq_num;
  d["x_m"] = r.x_m;
  d["y_m"] = r.y_m;
  d["rss_dbm"] = r.rss_dbm;
  d["burst_index"] = r.burst_index;
  return d;
}

Trace load(const std::string& pcap, const std::optional<std::string>& labels) {
  auto frames = read_probe_requests(pcap);
  std::vector<EmissionRecord> recs;
  if (labels) recs = read_labels(std::filesystem::path(*labels));
  return make_trace(std::move(frames), std::move(recs));
}

py::object opt(const std::optional<double>& v) {
  return v ? py::cast(*v) : py::none();
}

}  // namespace

PYBIND11_MODULE(_prsim, m) {
  m.doc() = "WiFi probe request trace simulator";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("presets", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : presets()) out.emplace_back(p.name, p.description);
    return out;
  });
  m.def("preset_json", [](const std::string& name) { return find_preset(name).json; });

  m.def("expand_config",
        [](const std::string& config, std::optional<std::uint64_t> seed) {
          return scenario_to_json(config_from(config, seed));
        },
        py::arg("config"), py::arg("seed") = py::none(),
        "Fully expanded scenario JSON for a preset name or JSON text.");

  m.def("generate",
        [](const std::string& config, const std::string& out_pcap,
           const std::string& out_labels, std::optional<std::uint64_t> seed,
           unsigned workers) {
          const auto cfg = config_from(config, seed);
          ScenarioResult r;
          {
            py::gil_scoped_release nogil;
            r = run_scenario(cfg, workers);
            write_pcap(frames_to_records(r.frames), out_pcap);
            write_labels(r.records, std::filesystem::path(out_labels));
          }
          return stats_dict(r.stats, cfg.seed);
        },
        py::arg("config"), py::arg("out_pcap"), py::arg("out_labels"),
        py::arg("seed") = py::none(), py::arg("workers") = 1,
        "Simulate a preset name or JSON scenario and write pcap + labels.");

  m.def("read_pcap", [](const std::string& path) {
    py::list out;
    for (const auto& f : read_probe_requests(path)) out.append(frame_dict(f));
    return out;
  });
  m.def("read_labels", [](const std::string& path) {
    py::list out;
    for (const auto& r : read_labels(std::filesystem::path(path))) out.append(label_dict(r));
    return out;
  });

  m.def("metrics",
        [](const std::string& pcap, std::optional<std::string> labels,
           std::vector<double> windows, double expected_period, double tolerance) {
          const Trace t = load(pcap, labels);
          MetricOptions o;
          o.expected_period_s = expected_period;
          o.tolerance_frac = tolerance;
          py::list out;
          for (double w : windows) {
            const auto a = aggregate(windowed_metrics(t, w, o), w);
            py::dict d;
            d["window_s"] = w;
            d["windows"] = a.windows;
            d["mrca"] = opt(a.mrca);
            d["mcr"] = a.mcr;
            d["numr"] = opt(a.numr);
            out.append(d);
          }
          return out;
        },
        py::arg("pcap"), py::arg("labels") = py::none(),
        py::arg("windows") = std::vector<double>{600, 1200, 1800, 3600},
        py::arg("expected_period") = 300.0, py::arg("tolerance") = 0.10);

  m.def("evaluate",
        [](const std::string& pcap, const std::string& labels, const std::string& method,
           double window, std::optional<double> stride, std::optional<double> eps,
           std::optional<std::size_t> min_pts, std::optional<double> rss_gap,
           std::optional<double> time_gap, std::optional<double> min_gap) {
          CountingParams p;
          if (eps) p.ietime_eps = *eps;
          if (min_pts) p.ietime_min_pts = *min_pts;
          if (rss_gap) p.rss_gap_db = *rss_gap;
          if (time_gap) p.time_gap_s = *time_gap;
          if (min_gap) p.min_gap_s = *min_gap;
          const Trace t = load(pcap, labels);
          const auto rep = evaluate(method, make_estimator(method, p), t, window,
                                    stride.value_or(window));
          py::dict d;
          d["method"] = rep.method;
          d["acc"] = rep.acc;
          d["mae"] = rep.mae;
          d["mse"] = rep.mse;
          py::list rows;
          for (const auto& w : rep.windows) {
            rows.append(py::make_tuple(w.t0, w.t1, w.estimated, w.truth));
          }
          d["windows"] = rows;
          return d;
        },
        py::arg("pcap"), py::arg("labels"), py::arg("method"), py::arg("window") = 40.0,
        py::arg("stride") = py::none(), py::arg("eps") = py::none(),
        py::arg("min_pts") = py::none(), py::arg("rss_gap") = py::none(),
        py::arg("time_gap") = py::none(), py::arg("min_gap") = py::none());

  m.def("compute_mrca",
        [](std::vector<double> changes, double expected_period, double tolerance) {
          return compute_mrca(changes, expected_period, tolerance);
        },
        py::arg("changes"), py::arg("expected_period"), py::arg("tolerance") = 0.10);
}
