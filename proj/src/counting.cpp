#include "prsim/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "prsim/error.hpp"
#include "prsim/random.hpp"

namespace prsim {

IeFingerprint ie_fingerprint(const ProbeRequestFrame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (const auto& ie : frame.ies) {
    feed(ie.tag);
    feed(static_cast<std::uint8_t>(ie.value.size()));
    for (auto b : ie.value) feed(b);
  }
  return h;
}

std::size_t count_iecluster(std::span<const ProbeRequestFrame> frames) {
  std::unordered_set<IeFingerprint> seen;
  for (const auto& f : frames) seen.insert(ie_fingerprint(f));
  return seen.size();
}

std::vector<AddressGroup> address_groups(
    std::span<const ProbeRequestFrame> frames) {
  std::unordered_map<MacAddress, std::size_t> slot;
  std::vector<AddressGroup> groups;
  std::vector<std::vector<double>> times;
  std::vector<double> rss_sum;
  for (const auto& f : frames) {
    auto [it, fresh] = slot.try_emplace(f.src, groups.size());
    if (fresh) {
      AddressGroup g;
      g.mac = f.src;
      g.fingerprint = ie_fingerprint(f);
      g.first_s = f.timestamp_s();
      groups.push_back(g);
      times.emplace_back();
      rss_sum.push_back(0.0);
    }
    const std::size_t i = it->second;
    times[i].push_back(f.timestamp_s());
    rss_sum[i] += f.rss_dbm;
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& g = groups[i];
    const auto& t = times[i];
    g.frames = t.size();
    g.last_s = t.back();
    g.mean_rss_dbm = rss_sum[i] / static_cast<double>(t.size());
    if (t.size() > 1) {
      double sum = 0.0;
      double sq = 0.0;
      for (std::size_t k = 1; k < t.size(); ++k) {
        const double gap = t[k] - t[k - 1];
        sum += gap;
        sq += gap * gap;
      }
      const double n = static_cast<double>(t.size() - 1);
      g.mean_ifi_s = sum / n;
      g.sd_ifi_s = std::sqrt(std::max(0.0, sq / n - g.mean_ifi_s * g.mean_ifi_s));
    }
  }
  return groups;
}

double ietime_distance(const AddressGroup& a, const AddressGroup& b,
                       double window_s) {
  if (a.fingerprint != b.fingerprint) {
    return std::numeric_limits<double>::infinity();
  }
  // Globally administered addresses are not randomized, so never shared.
  if (!a.mac.local_bit() || !b.mac.local_bit()) {
    return std::numeric_limits<double>::infinity();
  }
  // One radio cannot use two addresses at once.
  if (a.first_s <= b.last_s && b.first_s <= a.last_s) {
    return std::numeric_limits<double>::infinity();
  }
  const double d_mean = (a.mean_ifi_s - b.mean_ifi_s) / 0.01;
  const double d_sd = (a.sd_ifi_s - b.sd_ifi_s) / 0.01;
  const double d_rate = (static_cast<double>(a.frames) -
                         static_cast<double>(b.frames)) * 60.0 / window_s;
  return std::sqrt(d_mean * d_mean + d_sd * d_sd + d_rate * d_rate);
}

std::vector<int> dbscan(
    std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist,
    double eps, std::size_t min_pts) {
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  auto neighbors = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q) {
      if (q == p || dist(p, q) <= eps) out.push_back(q);
    }
    return out;
  };
  int cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] != kUnvisited) continue;
    auto seeds = neighbors(p);
    if (seeds.size() < min_pts) {
      label[p] = kNoise;
      continue;
    }
    label[p] = cluster;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::size_t q = seeds[k];
      if (label[q] == kNoise) label[q] = cluster;
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      auto more = neighbors(q);
      if (more.size() >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return label;
}

std::size_t count_ietime(std::span<const ProbeRequestFrame> frames, double eps,
                         std::size_t min_pts, double window_s) {
  if (frames.size() < 2) return frames.size();
  const auto groups = address_groups(frames);
  const auto labels = dbscan(
      groups.size(),
      [&](std::size_t i, std::size_t j) {
        return ietime_distance(groups[i], groups[j], window_s);
      },
      eps, min_pts);
  std::unordered_set<int> clusters;
  std::size_t noise = 0;
  for (int l : labels) {
    if (l < 0) {
      ++noise;
    } else {
      clusters.insert(l);
    }
  }
  return clusters.size() + noise;
}

std::size_t count_timerss(std::span<const ProbeRequestFrame> frames,
                          double rss_gap_db, double time_gap_s,
                          double min_gap_s) {
  struct Cluster {
    double last_s;
    double rss_sum;
    std::size_t n;
    bool open;
    double mean() const { return rss_sum / static_cast<double>(n); }
  };
  std::vector<Cluster> clusters;
  for (const auto& g : address_groups(frames)) {
    std::size_t target = clusters.size();
    double best = rss_gap_db;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (!g.mac.local_bit() || !clusters[c].open) continue;
      const double gap = g.first_s - clusters[c].last_s;
      if (gap < min_gap_s || gap <= 0.0 || gap > time_gap_s) continue;
      const double d = std::abs(g.mean_rss_dbm - clusters[c].mean());
      if (d <= best) {
        best = d;
        target = c;
      }
    }
    if (target == clusters.size()) clusters.push_back({g.last_s, 0.0, 0, g.mac.local_bit()});
    auto& c = clusters[target];
    c.last_s = std::max(c.last_s, g.last_s);
    c.rss_sum += g.mean_rss_dbm * static_cast<double>(g.frames);
    c.n += g.frames;
  }
  return clusters.size();
}

std::size_t count_oracle(std::span<const EmissionRecord> labels) {
  std::unordered_set<std::uint32_t> ids;
  for (const auto& r : labels) ids.insert(r.device_id);
  return ids.size();
}

bool within_tolerance(std::size_t estimated, std::size_t truth) {
  const auto slack = static_cast<std::size_t>(
      std::ceil(0.05 * static_cast<double>(truth) - 1e-12));
  const std::size_t err =
      estimated > truth ? estimated - truth : truth - estimated;
  return err <= slack;
}

Estimator make_estimator(std::string_view method, const CountingParams& p) {
  if (method == "iecluster") {
    return [](const WindowView& w) { return count_iecluster(w.frames); };
  }
  if (method == "ietime") {
    return [p](const WindowView& w) {
      return count_ietime(w.frames, p.ietime_eps, p.ietime_min_pts, w.t1 - w.t0);
    };
  }
  if (method == "timerss") {
    return [p](const WindowView& w) {
      return count_timerss(w.frames, p.rss_gap_db, p.time_gap_s, p.min_gap_s);
    };
  }
  if (method == "oracle") {
    return [](const WindowView& w) {
      if (w.labels.empty() && !w.frames.empty()) {
        throw IoError("the oracle estimator needs labels");
      }
      return count_oracle(w.labels);
    };
  }
  throw ConfigError("unknown counting method '" + std::string(method) + "'");
}

CountingReport evaluate(std::string_view method, const Estimator& estimator,
                        const Trace& trace, double window_s, double stride_s) {
  if (!(window_s > 0.0) || !(stride_s > 0.0)) {
    throw ConfigError("window and stride must be positive");
  }
  CountingReport report;
  report.method = std::string(method);
  if (trace.frames.empty()) return report;
  if (!trace.labeled()) throw IoError("counting evaluation needs labels");

  const double end = trace.span_s();
  auto time_of = [](const ProbeRequestFrame& f, double t) {
    return f.timestamp_s() < t;
  };
  for (std::size_t k = 0;; ++k) {
    const double t0 = static_cast<double>(k) * stride_s;
    if (t0 > end) break;
    const double t1 = t0 + window_s;
    const auto lo = std::lower_bound(trace.frames.begin(), trace.frames.end(),
                                     t0, time_of);
    const auto hi =
        std::lower_bound(lo, trace.frames.end(), t1, time_of);
    const auto a = static_cast<std::size_t>(lo - trace.frames.begin());
    const auto n = static_cast<std::size_t>(hi - lo);
    WindowView view{t0, t1, std::span(trace.frames).subspan(a, n),
                    std::span(trace.labels).subspan(a, n)};
    WindowEstimate est{t0, t1, estimator(view), count_oracle(view.labels)};
    report.windows.push_back(est);
  }

  double hits = 0.0;
  for (const auto& w : report.windows) {
    const double err = static_cast<double>(w.estimated) -
                       static_cast<double>(w.truth);
    if (within_tolerance(w.estimated, w.truth)) hits += 1.0;
    report.mae += std::abs(err);
    report.mse += err * err;
  }
  const auto n = static_cast<double>(report.windows.size());
  report.acc = hits / n;
  report.mae /= n;
  report.mse /= n;
  return report;
}

}  // namespace prsim
