#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"

namespace koopmotion {

using State = Eigen::VectorXd;
using Trajectory = std::vector<State>;

inline void require_dim(const State& x, Eigen::Index d, const char* what) {
  if (x.size() != d) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) +
                         ", got " + std::to_string(x.size()));
  }
}

inline bool all_finite(const State& x) { return x.allFinite(); }

/// Axis-aligned box. An empty box has zero-size bounds.
struct BoundingBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index dim() const { return lo.size(); }

  double diagonal() const { return (hi - lo).norm(); }

  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }

  bool contains(const State& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }

  /// Grows every axis by `fraction` of its own extent, split evenly on both sides.
  BoundingBox inflated(double fraction) const {
    const Eigen::VectorXd pad = 0.5 * fraction * (hi - lo);
    return {lo - pad, hi + pad};
  }

  /// Grows every axis by an absolute margin on both sides.
  BoundingBox padded(double margin) const {
    return {lo.array() - margin, hi.array() + margin};
  }

  void expand(const State& x) {
    if (lo.size() == 0) {
      lo = x;
      hi = x;
      return;
    }
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }

  static BoundingBox of(const Trajectory& points) {
    BoundingBox box;
    for (const auto& p : points) box.expand(p);
    return box;
  }

  friend bool operator==(const BoundingBox& a, const BoundingBox& b) {
    return a.lo.size() == b.lo.size() && a.lo == b.lo && a.hi == b.hi;
  }
};

/// Per-axis affine map of a box onto [-1, 1]^d; axes with zero extent are
/// only shifted.
struct AffineNormalization {
  Eigen::VectorXd center;
  Eigen::VectorXd half_range;

  static AffineNormalization fit(const BoundingBox& box) {
    AffineNormalization n;
    n.center = box.center();
    n.half_range = 0.5 * (box.hi - box.lo);
    for (Eigen::Index i = 0; i < n.half_range.size(); ++i) {
      if (!(n.half_range[i] > 0.0)) n.half_range[i] = 1.0;
    }
    return n;
  }

  State forward(const State& x) const {
    return ((x - center).array() / half_range.array()).matrix();
  }
  State inverse(const State& u) const {
    return (u.array() * half_range.array()).matrix() + center;
  }

  friend bool operator==(const AffineNormalization& a, const AffineNormalization& b) {
    return a.center == b.center && a.half_range == b.half_range;
  }
};

/// Regular grid over `box` with `counts[i]` nodes on axis i (endpoints
/// included). The last axis varies fastest.
inline Trajectory grid_points(const BoundingBox& box, const std::vector<int>& counts) {
  const auto d = box.dim();
  if (static_cast<Eigen::Index>(counts.size()) != d) {
    throw DimensionError("grid: " + std::to_string(counts.size()) + " axis counts for a " +
                         std::to_string(d) + "-d box");
  }
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 2) throw InputError("grid resolution must be >= 2 per axis");
    total *= static_cast<std::size_t>(c);
  }
  Trajectory nodes;
  nodes.reserve(total);
  std::vector<int> idx(counts.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    State p(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double t = static_cast<double>(idx[i]) / (counts[i] - 1);
      p[i] = box.lo[i] + t * (box.hi[i] - box.lo[i]);
    }
    nodes.push_back(std::move(p));
    for (auto i = static_cast<std::ptrdiff_t>(d) - 1; i >= 0; --i) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
  }
  return nodes;
}

}  // namespace koopmotion
