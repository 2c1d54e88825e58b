#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/rollout.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace koopmotion {

/// Classic DTW: Euclidean local cost, match/insert/delete moves, both ends
/// anchored, no window. Returns the accumulated (unnormalized) cost.
inline double dtwd(const Trajectory& a, const Trajectory& b) {
  if (a.empty() || b.empty()) throw InputError("dtwd: empty trajectory");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      if (a[i - 1].size() != b[j - 1].size()) throw DimensionError("dtwd: point dimensions differ");
      const double cost = (a[i - 1] - b[j - 1]).norm();
      cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Area of the triangle (p, q, r) in any dimension, from the cross-product
/// components of u = q - p and v = r - p.
inline double triangle_area(const State& p, const State& q, const State& r) {
  const State u = q - p;
  const State v = r - p;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (Eigen::Index j = i + 1; j < u.size(); ++j) {
      const double c = u[i] * v[j] - u[j] * v[i];
      sum += c * c;
    }
  }
  return 0.5 * std::sqrt(sum);
}

/// Swept error area: per segment, the quad (d_t, d_t+1, p_t+1, p_t) split
/// into (d_t, d_t+1, p_t+1) and (d_t, p_t+1, p_t).
inline double sea(const Trajectory& demo, const Trajectory& pred) {
  if (demo.size() != pred.size()) {
    throw InputError("sea: length mismatch (" + std::to_string(demo.size()) + " vs " +
                     std::to_string(pred.size()) + ")");
  }
  if (demo.size() < 2) throw InputError("sea: need at least 2 points");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < demo.size(); ++t) {
    total += triangle_area(demo[t], demo[t + 1], pred[t + 1]);
    total += triangle_area(demo[t], pred[t + 1], pred[t]);
  }
  return total;
}

/// Arc-length resampling to exactly n points; endpoints preserved.
inline Trajectory resample_to(const Trajectory& traj, std::size_t n) {
  if (traj.size() < 2) throw InputError("resample_to: need at least 2 points");
  if (n < 2) throw InputError("resample_to: n must be >= 2");
  std::vector<double> cum(traj.size(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i) cum[i] = cum[i - 1] + (traj[i] - traj[i - 1]).norm();
  const double length = cum.back();
  if (!(length > 0.0)) throw InputError("resample_to: trajectory has zero length");

  Trajectory out;
  out.reserve(n);
  out.push_back(traj.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double s = length * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 1 < traj.size() && cum[seg] < s) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double w = span > 0.0 ? std::clamp((s - cum[seg - 1]) / span, 0.0, 1.0) : 0.0;
    out.push_back((1.0 - w) * traj[seg - 1] + w * traj[seg]);
  }
  out.push_back(traj.back());
  return out;
}

struct MetricsReport {
  std::vector<std::string> demo_ids;
  std::vector<double> per_demo_dtwd;
  std::vector<double> per_demo_sea;
  /// Per-demo failure message (empty when the demo was evaluated).
  std::vector<std::string> failures;
  double mean_dtwd = 0.0;
  double std_dtwd = 0.0;
  double mean_sea = 0.0;
  double std_sea = 0.0;
  std::size_t evaluated = 0;
  bool dtw_normalized = false;
};

namespace detail {

inline void mean_std(const std::vector<double>& values, const std::vector<std::string>& failures,
                     double& mean, double& stddev) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!failures[i].empty()) continue;
    sum += values[i];
    ++n;
  }
  mean = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  double sq = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!failures[i].empty()) continue;
    sq += (values[i] - mean) * (values[i] - mean);
  }
  stddev = n ? std::sqrt(sq / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Metrics for given predictions, one per demo of `full_set`. Predictions of
/// another length are arc-length resampled to the demo's length.
inline MetricsReport evaluate_predictions(const DemonstrationSet& full_set,
                                          const std::vector<Trajectory>& predictions) {
  if (predictions.size() != full_set.demos().size()) {
    throw InputError("evaluate: one prediction per demo required");
  }
  MetricsReport report;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& demo = full_set.demos()[i];
    report.demo_ids.push_back(demo.id);
    double d = std::numeric_limits<double>::quiet_NaN();
    double s = d;
    std::string failure;
    try {
      Trajectory pred = predictions[i];
      if (pred.size() == 1) pred.push_back(pred.front());
      // A prediction that never moves equals its start at every resampled point.
      const bool still = pred.size() >= 2 && std::all_of(pred.begin(), pred.end(), [&](const State& p) {
        return p == pred.front();
      });
      // Equal-length predictions are already aligned sample for sample.
      const Trajectory aligned = still ? Trajectory(demo.points.size(), pred.front())
                                 : pred.size() == demo.points.size() ? pred
                                                                     : resample_to(pred, demo.points.size());
      d = dtwd(demo.points, aligned);
      s = sea(demo.points, aligned);
    } catch (const Error& e) {
      failure = e.what();
    }
    report.per_demo_dtwd.push_back(d);
    report.per_demo_sea.push_back(s);
    report.failures.push_back(failure);
    if (failure.empty()) ++report.evaluated;
  }
  detail::mean_std(report.per_demo_dtwd, report.failures, report.mean_dtwd, report.std_dtwd);
  detail::mean_std(report.per_demo_sea, report.failures, report.mean_sea, report.std_sea);
  return report;
}

/// Rolls out from every demo start with substeps = stride (one sub-step per
/// original sample) and scores against the full-resolution demos. Rollout
/// blowups are recorded per demo and excluded from the means.
inline MetricsReport evaluate(const FlowField& field, const DemonstrationSet& full_set, int stride,
                              const RolloutLimits& limits) {
  if (stride < 1) throw InputError("evaluate: stride must be >= 1");
  std::vector<Trajectory> predictions;
  std::vector<std::string> blowups(full_set.demos().size());
  for (std::size_t i = 0; i < full_set.demos().size(); ++i) {
    const auto& demo = full_set.demos()[i];
    try {
      predictions.push_back(substep_rollout(field, demo.points.front(), stride, limits).states);
    } catch (const NumericBlowupError& e) {
      predictions.push_back({demo.points.front()});
      blowups[i] = e.what();
    }
  }
  MetricsReport report = evaluate_predictions(full_set, predictions);
  bool any = false;
  for (std::size_t i = 0; i < blowups.size(); ++i) {
    if (blowups[i].empty()) continue;
    any = true;
    if (report.failures[i].empty()) --report.evaluated;
    report.failures[i] = blowups[i];
    report.per_demo_dtwd[i] = report.per_demo_sea[i] = std::numeric_limits<double>::quiet_NaN();
  }
  if (any) {
    detail::mean_std(report.per_demo_dtwd, report.failures, report.mean_dtwd, report.std_dtwd);
    detail::mean_std(report.per_demo_sea, report.failures, report.mean_sea, report.std_sea);
  }
  return report;
}

}  // namespace koopmotion
