#ifndef MOVO_EVALUATE_HPP
#define MOVO_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "movo/geometry.hpp"

namespace movo {

/// RMSE / Mean / Median / S.D. bundle, population statistics.
struct ErrorStats {
  double rmse = 0;
  double mean = 0;
  double median = 0;
  double sd = 0;
};

inline ErrorStats stats(std::vector<double> errors) {
  if (errors.empty()) throw std::invalid_argument("stats: empty error list");
  const std::size_t n = errors.size();
  double sum = 0, sumSq = 0;
  for (double e : errors) {
    sum += e;
    sumSq += e * e;
  }
  ErrorStats s;
  s.mean = sum / static_cast<double>(n);
  s.rmse = std::sqrt(sumSq / static_cast<double>(n));
  double var = 0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.sd = std::sqrt(var / static_cast<double>(n));
  std::sort(errors.begin(), errors.end());
  s.median = n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  return s;
}

struct PosePair {
  double tGt = 0;
  double tEst = 0;
  Pose gt;
  Pose est;
};

/// Greedy unique timestamp matching by ascending |t_gt - t_est|; pairs beyond
/// maxDiff dropped. Output sorted by ground-truth time.
inline std::vector<PosePair> associate_poses(const Trajectory& gt, const Trajectory& est,
                                             double maxDiff) {
  if (maxDiff <= 0) throw std::invalid_argument("associate_poses: maxDiff must be > 0");
  struct Cand {
    double diff;
    std::size_t g, e;
  };
  std::vector<Cand> cands;
  for (std::size_t g = 0; g < gt.entries.size(); ++g)
    for (std::size_t e = 0; e < est.entries.size(); ++e) {
      double diff = std::abs(gt.entries[g].timestamp - est.entries[e].timestamp);
      if (diff <= maxDiff) cands.push_back({diff, g, e});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.diff != b.diff) return a.diff < b.diff;
    if (a.g != b.g) return a.g < b.g;
    return a.e < b.e;
  });
  std::vector<char> usedG(gt.entries.size(), 0), usedE(est.entries.size(), 0);
  std::vector<PosePair> out;
  for (const Cand& c : cands) {
    if (usedG[c.g] || usedE[c.e]) continue;
    usedG[c.g] = 1;
    usedE[c.e] = 1;
    out.push_back({gt.entries[c.g].timestamp, est.entries[c.e].timestamp, gt.entries[c.g].pose,
                   est.entries[c.e].pose});
  }
  std::sort(out.begin(), out.end(), [](const PosePair& a, const PosePair& b) { return a.tGt < b.tGt; });
  return out;
}

/// Absolute trajectory error: rigid no-scale alignment of estimated positions
/// onto ground truth, then per-pair position error statistics.
inline ErrorStats ate(const std::vector<PosePair>& pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("ate: need at least 3 pose pairs");
  std::vector<Eigen::Vector3d> est, gt;
  est.reserve(pairs.size());
  gt.reserve(pairs.size());
  for (const PosePair& p : pairs) {
    est.push_back(p.est.translation);
    gt.push_back(p.gt.translation);
  }
  Pose align = rigid_align(est, gt);
  std::vector<double> errors;
  errors.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    errors.push_back((gt[i] - align.apply(est[i])).norm());
  return stats(std::move(errors));
}

struct RpeDelta {
  enum class Mode { Frames, Seconds };
  Mode mode = Mode::Frames;
  double value = 1;

  static RpeDelta frames(int n) { return {Mode::Frames, static_cast<double>(n)}; }
  static RpeDelta seconds(double s) { return {Mode::Seconds, s}; }
};

/// Relative pose error over a fixed interval. Translational part in the input
/// unit (meters), rotational part in degrees.
inline std::pair<ErrorStats, ErrorStats> rpe(const std::vector<PosePair>& pairs,
                                             const RpeDelta& delta) {
  if (delta.value <= 0) throw std::invalid_argument("rpe: delta must be > 0");
  std::vector<double> transErrors, rotErrors;
  const std::size_t n = pairs.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j;
    if (delta.mode == RpeDelta::Mode::Frames) {
      j = i + static_cast<std::size_t>(delta.value);
      if (j >= n) break;
    } else {
      double target = pairs[i].tGt + delta.value;
      j = i + 1;
      while (j < n && pairs[j].tGt < target) ++j;
      if (j >= n) break;
    }
    Pose gtRel = compose(inverse(pairs[i].gt), pairs[j].gt);
    Pose estRel = compose(inverse(pairs[i].est), pairs[j].est);
    Pose err = compose(inverse(gtRel), estRel);
    transErrors.push_back(err.translation.norm());
    rotErrors.push_back(rotation_angle(err));
  }
  if (transErrors.empty()) throw std::invalid_argument("rpe: no valid intervals");
  return {stats(std::move(transErrors)), stats(std::move(rotErrors))};
}

/// RMSE improvement: F = (1 - beta/alpha) * 100, alpha without the method,
/// beta with it.
inline double improvement(double alpha, double beta) {
  if (alpha <= 0) throw std::invalid_argument("improvement: alpha must be > 0");
  return (1.0 - beta / alpha) * 100.0;
}

/// Per-sequence CSV row; improvement is empty unless a baseline was given.
struct StatsRow {
  std::string metric;
  ErrorStats stats;
  std::optional<double> improvement;
};

inline void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out) {
  out << "metric,rmse,mean,median,sd,improvement\n";
  char buf[256];
  for (const StatsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,", r.metric.c_str(), r.stats.rmse,
                  r.stats.mean, r.stats.median, r.stats.sd);
    out << buf;
    if (r.improvement) {
      std::snprintf(buf, sizeof(buf), "%.2f", *r.improvement);
      out << buf;
    }
    out << "\n";
  }
}

inline void write_stats_csv(const std::vector<StatsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_stats_csv(rows, out);
}

/// Reads the rmse column of a CSV produced by write_stats_csv, keyed by metric.
inline std::vector<std::pair<std::string, double>> read_stats_csv_rmse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("metric,rmse", 0) != 0)
    throw std::runtime_error("bad stats CSV header in " + path);
  std::vector<std::pair<std::string, double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("bad stats CSV row in " + path);
    out.emplace_back(line.substr(0, c1), std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  return out;
}

}  // namespace movo

#endif  // MOVO_EVALUATE_HPP
