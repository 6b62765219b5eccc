#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prsim/engine.hpp"
#include "prsim/frame80211.hpp"
#include "prsim/metrics.hpp"

namespace prsim {

using IeFingerprint = std::uint64_t;

/// Digest of the ordered (tag, value) list after the SSID element. Addresses,
/// sequence numbers and radio metadata do not contribute.
IeFingerprint ie_fingerprint(const ProbeRequestFrame& frame);

/// Distinct fingerprints in the window.
std::size_t count_iecluster(std::span<const ProbeRequestFrame> frames);

/// Frames sharing a source address within one window. Features are the ones
/// the IE+timing estimator clusters on.
struct AddressGroup {
  MacAddress mac;
  IeFingerprint fingerprint = 0;
  std::size_t frames = 0;
  double first_s = 0.0;
  double last_s = 0.0;
  double mean_ifi_s = 0.0;  // mean gap between consecutive frames, 0 if single
  double sd_ifi_s = 0.0;
  double mean_rss_dbm = 0.0;
};

/// Groups in order of first appearance.
std::vector<AddressGroup> address_groups(
    std::span<const ProbeRequestFrame> frames);

/// Distance between two groups in the IE+timing feature space: infinite for
/// different fingerprints, globally administered addresses or groups that
/// overlap in time, otherwise the Euclidean distance of
/// (mean IFI, IFI spread) in tens of milliseconds and frame rate in frames per
/// minute.
double ietime_distance(const AddressGroup& a, const AddressGroup& b,
                       double window_s);

/// DBSCAN over arbitrary points. Returns cluster ids per point, -1 for noise.
std::vector<int> dbscan(std::size_t n,
                        const std::function<double(std::size_t, std::size_t)>& dist,
                        double eps, std::size_t min_pts);

/// DBSCAN over address groups; clusters plus noise points (as singletons).
/// Fewer than 2 frames returns the frame count.
std::size_t count_ietime(std::span<const ProbeRequestFrame> frames, double eps,
                         std::size_t min_pts, double window_s = 40.0);

/// Greedy chaining in time order. Frames sharing a source address stay
/// together; a newly seen address joins the cluster whose last frame lies
/// between `min_gap_s` and `time_gap_s` before it and whose running mean RSS
/// is nearest, if within `rss_gap_db`, or starts a new one. Globally
/// administered addresses always stand alone.
std::size_t count_timerss(std::span<const ProbeRequestFrame> frames,
                          double rss_gap_db, double time_gap_s,
                          double min_gap_s = 0.0);

/// Distinct devices in the labels; the ceiling every estimator is scored
/// against.
std::size_t count_oracle(std::span<const EmissionRecord> labels);

struct WindowView {
  double t0 = 0.0;
  double t1 = 0.0;
  std::span<const ProbeRequestFrame> frames;
  std::span<const EmissionRecord> labels;  // empty for unlabeled traces
};

using Estimator = std::function<std::size_t(const WindowView&)>;

struct WindowEstimate {
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t estimated = 0;
  std::size_t truth = 0;
};

struct CountingReport {
  std::string method;
  std::vector<WindowEstimate> windows;
  double acc = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

/// |est - truth| <= ceil(0.05 * truth).
bool within_tolerance(std::size_t estimated, std::size_t truth);

struct CountingParams {
  double ietime_eps = 2.0;
  std::size_t ietime_min_pts = 1;
  double rss_gap_db = 0.5;
  double time_gap_s = 28.0;
  double min_gap_s = 18.0;
};

inline constexpr std::string_view kMethodNames[] = {"iecluster", "ietime",
                                                    "timerss", "oracle"};

/// Throws ConfigError for an unknown method.
Estimator make_estimator(std::string_view method, const CountingParams& params);

/// Slides [t0, t0 + window_s) in steps of stride_s over the labeled span.
/// Windows where no device transmits count with truth 0. An empty trace
/// gives a report with no windows and zero scores. Throws ConfigError for
/// non-positive window or stride, IoError for an unlabeled trace.
CountingReport evaluate(std::string_view method, const Estimator& estimator,
                        const Trace& trace, double window_s = 40.0,
                        double stride_s = 40.0);

}  // namespace prsim
