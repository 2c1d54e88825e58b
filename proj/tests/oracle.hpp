#pragma once

// Independent long-double reference for the model and losses. Written with
// plain loops and no Eigen, so it shares no code path with the library.

#include <cmath>
#include <cstddef>
#include <vector>

#include "koopmotion/koopman_model.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace oracle {

using Real = long double;
using Vec = std::vector<Real>;
using Mat = std::vector<Vec>;  // row-major rows

struct Params {
  Mat W;  // nu x d
  Vec b;  // nu
  Mat A;  // D x r
  Mat B;  // D x r

  std::size_t d() const { return W.empty() ? 0 : W[0].size(); }
  std::size_t nu() const { return W.size(); }
  std::size_t D() const { return nu() + d(); }
  std::size_t r() const { return A.empty() ? 0 : A[0].size(); }
};

inline Mat from_eigen(const Eigen::MatrixXd& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Vec from_eigen(const Eigen::VectorXd& v) {
  Vec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

inline Params from_model(const koopmotion::KoopmanModel& m) {
  return {from_eigen(m.lifting.W), from_eigen(Eigen::VectorXd(m.lifting.b)), from_eigen(m.A), from_eigen(m.B)};
}

inline Vec lift(const Params& p, const Vec& x) {
  Vec z(x);
  for (std::size_t j = 0; j < p.nu(); ++j) {
    Real s = p.b[j];
    for (std::size_t i = 0; i < p.d(); ++i) s += p.W[j][i] * x[i];
    z.push_back(std::cos(s));
  }
  return z;
}

/// K z = A (B^T z)
inline Vec apply_k(const Params& p, const Vec& z) {
  Vec q(p.r(), 0.0L);
  for (std::size_t k = 0; k < p.r(); ++k)
    for (std::size_t i = 0; i < p.D(); ++i) q[k] += p.B[i][k] * z[i];
  Vec out(p.D(), 0.0L);
  for (std::size_t i = 0; i < p.D(); ++i)
    for (std::size_t k = 0; k < p.r(); ++k) out[i] += p.A[i][k] * q[k];
  return out;
}

inline Vec field(const Params& p, const Vec& x) {
  const Vec kz = apply_k(p, lift(p, x));
  Vec f(p.d());
  for (std::size_t i = 0; i < p.d(); ++i) f[i] = kz[i] - x[i];
  return f;
}

/// Divergence by central differences of the field, in long double.
inline Real divergence_fd(const Params& p, const Vec& x, Real h = 1e-6L) {
  Real div = 0.0L;
  for (std::size_t i = 0; i < p.d(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    div += (field(p, a)[i] - field(p, b)[i]) / (2.0L * h);
  }
  return div;
}

/// Divergence from the exact Jacobian of the lifted prediction.
inline Real divergence_exact(const Params& p, const Vec& x) {
  // d/dx_i of (K lift(x))_i = sum_m K_im dlift_m/dx_i
  Real div = 0.0L;
  for (std::size_t i = 0; i < p.d(); ++i) {
    for (std::size_t m = 0; m < p.D(); ++m) {
      Real kim = 0.0L;
      for (std::size_t k = 0; k < p.r(); ++k) kim += p.A[i][k] * p.B[m][k];
      Real dl = 0.0L;
      if (m < p.d()) {
        dl = m == i ? 1.0L : 0.0L;
      } else {
        const std::size_t j = m - p.d();
        Real s = p.b[j];
        for (std::size_t t = 0; t < p.d(); ++t) s += p.W[j][t] * x[t];
        dl = -std::sin(s) * p.W[j][i];
      }
      div += kim * dl;
    }
    div -= 1.0L;
  }
  return div;
}

inline Vec to_vec(const koopmotion::State& x) { return from_eigen(Eigen::VectorXd(x)); }

struct Losses {
  Real koopman = 0.0L, divergence = 0.0L, goal = 0.0L, total = 0.0L;
};

inline Losses losses(const Params& p, const std::vector<koopmotion::TrainingPair>& batch,
                     const std::vector<koopmotion::State>& div_points, const koopmotion::State& goal,
                     Real bk, Real bd, Real bg) {
  Losses l;
  const Real D = static_cast<Real>(p.D());
  for (const auto& pair : batch) {
    const Vec z1 = lift(p, to_vec(pair.x_k1));
    const Vec kz = apply_k(p, lift(p, to_vec(pair.x_k)));
    for (std::size_t i = 0; i < p.D(); ++i) l.koopman += (z1[i] - kz[i]) * (z1[i] - kz[i]);
  }
  l.koopman /= static_cast<Real>(batch.size()) * D;
  for (const auto& u : div_points) {
    const Real div = divergence_exact(p, to_vec(u));
    l.divergence += div * div;
  }
  l.divergence /= static_cast<Real>(div_points.size());
  const Vec zg = lift(p, to_vec(goal));
  const Vec kg = apply_k(p, zg);
  for (std::size_t i = 0; i < p.D(); ++i) l.goal += (zg[i] - kg[i]) * (zg[i] - kg[i]);
  l.goal /= D;
  l.total = bk * l.koopman + bd * l.divergence + bg * l.goal;
  return l;
}

}  // namespace oracle
