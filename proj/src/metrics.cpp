#include "prsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "prsim/error.hpp"

namespace prsim {

double Trace::span_s() const {
  return frames.empty() ? 0.0 : frames.back().timestamp_s();
}

Trace make_trace(std::vector<ProbeRequestFrame> frames,
                 std::vector<EmissionRecord> labels) {
  if (!labels.empty()) {
    if (labels.size() != frames.size()) {
      throw IoError("labels have " + std::to_string(labels.size()) +
                    " rows but the capture has " +
                    std::to_string(frames.size()) + " probe requests");
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (labels[i].timestamp_us != frames[i].timestamp_us ||
          labels[i].emitted_mac != frames[i].src) {
        throw IoError("label row " + std::to_string(i) +
                      " does not match its capture record");
      }
    }
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].timestamp_us < frames[i - 1].timestamp_us) {
      throw IoError("capture is not time-sorted at record " + std::to_string(i));
    }
  }
  return Trace{std::move(frames), std::move(labels)};
}

std::vector<double> mac_change_events(std::span<const Sighting> sightings) {
  std::vector<double> out;
  for (std::size_t i = 1; i < sightings.size(); ++i) {
    if (sightings[i].mac != sightings[i - 1].mac) out.push_back(sightings[i].t);
  }
  return out;
}

std::vector<IdentityTrack> identity_tracks(const Trace& trace) {
  std::map<std::uint32_t, std::vector<Sighting>> by_identity;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const std::uint32_t id = trace.labeled() ? trace.labels[i].device_id : 0;
    by_identity[id].push_back({trace.frames[i].timestamp_s(), trace.frames[i].src});
  }
  std::vector<IdentityTrack> out;
  out.reserve(by_identity.size());
  for (const auto& [id, sightings] : by_identity) {
    IdentityTrack track;
    track.identity = id;
    track.frame_times.reserve(sightings.size());
    for (const auto& s : sightings) track.frame_times.push_back(s.t);
    track.changes = mac_change_events(sightings);
    out.push_back(std::move(track));
  }
  return out;
}

MrcaCounts mrca_counts(std::span<const double> changes,
                       std::span<const double> opportunities,
                       double expected_period_s, double tolerance_frac,
                       double t0, double t1) {
  MrcaCounts counts;
  const double band = tolerance_frac * expected_period_s;
  for (std::size_t k = 1; k < changes.size(); ++k) {
    if (changes[k] < t0 || changes[k] >= t1) continue;
    double expected = changes[k - 1] + expected_period_s;
    if (!opportunities.empty()) {
      const auto it = std::lower_bound(opportunities.begin(),
                                       opportunities.end(), expected);
      if (it != opportunities.end()) expected = *it;
    }
    ++counts.intervals;
    if (std::abs(changes[k] - expected) <= band + 1e-9) ++counts.aligned;
  }
  return counts;
}

std::optional<double> compute_mrca(std::span<const double> changes,
                                   double expected_period_s,
                                   double tolerance_frac) {
  return compute_mrca(changes, {}, expected_period_s, tolerance_frac);
}

std::optional<double> compute_mrca(std::span<const double> changes,
                                   std::span<const double> opportunities,
                                   double expected_period_s,
                                   double tolerance_frac) {
  if (!(expected_period_s > 0.0)) {
    throw ConfigError("expected period must be positive");
  }
  if (changes.size() < 2) return std::nullopt;
  return mrca_counts(changes, opportunities, expected_period_s, tolerance_frac,
                     -INFINITY, INFINITY)
      .value();
}

double compute_mcr(std::size_t changes_in_window, double window_s) {
  if (!(window_s > 0.0)) throw ConfigError("window must be positive");
  return static_cast<double>(changes_in_window) * 60.0 / window_s;
}

double compute_mcr(std::span<const double> changes, double t0, double t1) {
  const auto n = std::count_if(changes.begin(), changes.end(),
                               [&](double t) { return t >= t0 && t < t1; });
  return compute_mcr(static_cast<std::size_t>(n), t1 - t0);
}

std::optional<double> compute_numr(std::span<const ProbeRequestFrame> frames) {
  if (frames.empty()) return std::nullopt;
  std::unordered_set<MacAddress> macs;
  for (const auto& f : frames) macs.insert(f.src);
  return static_cast<double>(frames.size()) / static_cast<double>(macs.size());
}

TraceMetrics window_metrics(const Trace& trace,
                            std::span<const IdentityTrack> tracks, double t0,
                            double t1, const MetricOptions& opt) {
  TraceMetrics m;
  m.t0 = t0;
  m.t1 = t1;
  const auto lo = std::lower_bound(
      trace.frames.begin(), trace.frames.end(), t0,
      [](const ProbeRequestFrame& f, double t) { return f.timestamp_s() < t; });
  const auto hi = std::lower_bound(
      lo, trace.frames.end(), t1,
      [](const ProbeRequestFrame& f, double t) { return f.timestamp_s() < t; });
  const std::span<const ProbeRequestFrame> in_window(lo, hi);
  m.pr_count = in_window.size();
  m.numr = compute_numr(in_window);
  {
    std::unordered_set<MacAddress> macs;
    for (const auto& f : in_window) macs.insert(f.src);
    m.distinct_mac_count = macs.size();
  }

  double mcr_sum = 0.0;
  std::size_t present = 0;
  for (const auto& track : tracks) {
    const auto first = std::lower_bound(track.frame_times.begin(),
                                        track.frame_times.end(), t0);
    const bool seen = first != track.frame_times.end() && *first < t1;
    const auto n = static_cast<std::size_t>(
        std::count_if(track.changes.begin(), track.changes.end(),
                      [&](double t) { return t >= t0 && t < t1; }));
    m.change_count += n;
    const auto counts = mrca_counts(
        track.changes,
        opt.opportunity_aware ? std::span<const double>(track.frame_times)
                              : std::span<const double>(),
        opt.expected_period_s, opt.tolerance_frac, t0, t1);
    m.mrca_counts.intervals += counts.intervals;
    m.mrca_counts.aligned += counts.aligned;
    if (seen) {
      mcr_sum += compute_mcr(n, t1 - t0);
      ++present;
    }
  }
  m.mrca = m.mrca_counts.value();
  m.mcr = present ? mcr_sum / static_cast<double>(present) : 0.0;
  return m;
}

std::vector<TraceMetrics> windowed_metrics(const Trace& trace, double window_s,
                                           const MetricOptions& opt) {
  if (!(window_s > 0.0)) throw ConfigError("window must be positive");
  const double span = opt.span_s > 0.0 ? opt.span_s : trace.span_s();
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(span / window_s - 1e-9)));
  const auto tracks = identity_tracks(trace);
  std::vector<TraceMetrics> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t0 = static_cast<double>(k) * window_s;
    out.push_back(window_metrics(trace, tracks, t0, t0 + window_s, opt));
  }
  return out;
}

AggregateMetrics aggregate(std::span<const TraceMetrics> windows,
                           double window_s) {
  AggregateMetrics agg;
  agg.window_s = window_s;
  agg.windows = windows.size();
  MrcaCounts pooled;
  double mcr = 0.0;
  double numr = 0.0;
  std::size_t numr_n = 0;
  for (const auto& w : windows) {
    pooled.intervals += w.mrca_counts.intervals;
    pooled.aligned += w.mrca_counts.aligned;
    mcr += w.mcr;
    if (w.numr) {
      numr += *w.numr;
      ++numr_n;
    }
  }
  agg.mrca = pooled.value();
  agg.mcr = windows.empty() ? 0.0 : mcr / static_cast<double>(windows.size());
  if (numr_n) agg.numr = numr / static_cast<double>(numr_n);
  return agg;
}

std::optional<double> relative_deviation(std::optional<double> a,
                                         std::optional<double> b) {
  if (!a || !b) return std::nullopt;
  if (*a == *b) return 0.0;
  if (*b == 0.0) return INFINITY;
  return std::abs(*a - *b) / std::abs(*b);
}

std::vector<MetricComparison> compare_traces(const Trace& a, const Trace& b,
                                             std::span<const double> windows_s,
                                             const MetricOptions& opt) {
  std::vector<MetricComparison> out;
  for (double w : windows_s) {
    const auto ma = windowed_metrics(a, w, opt);
    const auto mb = windowed_metrics(b, w, opt);
    const AggregateMetrics ga = aggregate(ma, w);
    const AggregateMetrics gb = aggregate(mb, w);
    out.push_back({w, "mrca", ga.mrca, gb.mrca, relative_deviation(ga.mrca, gb.mrca)});
    out.push_back({w, "mcr", ga.mcr, gb.mcr, relative_deviation(ga.mcr, gb.mcr)});
    out.push_back({w, "numr", ga.numr, gb.numr, relative_deviation(ga.numr, gb.numr)});
  }
  return out;
}

}  // namespace prsim
