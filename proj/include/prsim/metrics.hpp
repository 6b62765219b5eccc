#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prsim/engine.hpp"
#include "prsim/frame80211.hpp"

namespace prsim {

/// A capture and, optionally, the ground truth aligned with it row by row.
struct Trace {
  std::vector<ProbeRequestFrame> frames;
  std::vector<EmissionRecord> labels;  // empty when unlabeled

  bool labeled() const { return !labels.empty(); }
  /// End of the observed span in seconds (last frame time, 0 when empty).
  double span_s() const;
};

/// Builds a trace, checking that labels (when given) match the frames in count,
/// timestamp and source address. Throws IoError on mismatch.
Trace make_trace(std::vector<ProbeRequestFrame> frames,
                 std::vector<EmissionRecord> labels = {});

/// One address sighting of a tracked identity.
struct Sighting {
  double t;
  MacAddress mac;
};

/// Times at which the source address differs from the previous sighting.
/// Input must be time-sorted.
std::vector<double> mac_change_events(std::span<const Sighting> sightings);

/// Sightings per tracked identity: ground-truth device when the trace is
/// labeled, a single identity (key 0) otherwise.
struct IdentityTrack {
  std::uint32_t identity = 0;
  std::vector<double> frame_times;
  std::vector<double> changes;
};
std::vector<IdentityTrack> identity_tracks(const Trace& trace);

struct MrcaCounts {
  std::size_t intervals = 0;
  std::size_t aligned = 0;
  std::optional<double> value() const {
    if (intervals == 0) return std::nullopt;
    return static_cast<double>(aligned) / static_cast<double>(intervals);
  }
};

/// Counts change intervals within `tolerance_frac * expected_period_s` of the
/// expected change time. With no `opportunities`, the expected time is the
/// previous change plus the period. With the identity's transmission times,
/// it is the first transmission at or after that instant, since a rotation
/// cannot be observed before the device next transmits. Only intervals ending
/// in [t0, t1) are counted.
MrcaCounts mrca_counts(std::span<const double> changes,
                       std::span<const double> opportunities,
                       double expected_period_s, double tolerance_frac,
                       double t0, double t1);

/// Fraction of aligned change intervals; nullopt with fewer than 2 changes.
std::optional<double> compute_mrca(std::span<const double> changes,
                                   double expected_period_s,
                                   double tolerance_frac = 0.10);
std::optional<double> compute_mrca(std::span<const double> changes,
                                   std::span<const double> opportunities,
                                   double expected_period_s,
                                   double tolerance_frac = 0.10);

/// Changes per minute.
double compute_mcr(std::size_t changes_in_window, double window_s);
double compute_mcr(std::span<const double> changes, double t0, double t1);

/// Frames per distinct source address; nullopt for an empty window.
std::optional<double> compute_numr(std::span<const ProbeRequestFrame> frames);

struct TraceMetrics {
  double t0 = 0.0;
  double t1 = 0.0;
  std::optional<double> mrca;
  MrcaCounts mrca_counts;
  double mcr = 0.0;
  std::optional<double> numr;
  std::size_t pr_count = 0;
  std::size_t distinct_mac_count = 0;
  std::size_t change_count = 0;
};

struct MetricOptions {
  double expected_period_s = 300.0;
  double tolerance_frac = 0.10;
  /// Score rotations against the first transmission after expiry.
  bool opportunity_aware = true;
  /// Span to cover; 0 uses the last frame time.
  double span_s = 0.0;
};

/// Metrics over the half-open window [t0, t1). In a labeled trace MCR is the
/// mean per-device rate over devices seen in the window; MRCA pools intervals
/// over devices.
TraceMetrics window_metrics(const Trace& trace,
                            std::span<const IdentityTrack> tracks, double t0,
                            double t1, const MetricOptions& opt);

/// Consecutive windows of `window_s` aligned to t = 0 covering the span.
std::vector<TraceMetrics> windowed_metrics(const Trace& trace, double window_s,
                                           const MetricOptions& opt);

/// Pools a window series: MRCA over all intervals, MCR and NUMR as means over
/// windows.
struct AggregateMetrics {
  double window_s = 0.0;
  std::size_t windows = 0;
  std::optional<double> mrca;
  double mcr = 0.0;
  std::optional<double> numr;
};
AggregateMetrics aggregate(std::span<const TraceMetrics> windows,
                           double window_s);

struct MetricComparison {
  double window_s;
  std::string metric;  // "mrca", "mcr", "numr"
  std::optional<double> a;
  std::optional<double> b;
  /// |a - b| / |b|; 0 when both are 0, nullopt when either is undefined.
  std::optional<double> relative_deviation;
};

std::optional<double> relative_deviation(std::optional<double> a,
                                         std::optional<double> b);

std::vector<MetricComparison> compare_traces(const Trace& a, const Trace& b,
                                             std::span<const double> windows_s,
                                             const MetricOptions& opt);

}  // namespace prsim
