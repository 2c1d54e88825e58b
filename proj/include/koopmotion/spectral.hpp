#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/lifting.hpp"

namespace koopmotion {

using Complex = std::complex<double>;

namespace detail {

/// Reduces `h` to upper Hessenberg form in place (Householder).
inline void to_hessenberg(Eigen::MatrixXcd& h) {
  const Eigen::Index n = h.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    Eigen::VectorXcd x = h.col(k).segment(k + 1, n - k - 1);
    const double alpha = x.norm();
    if (alpha == 0.0) continue;
    const Complex phase = std::abs(x[0]) > 0.0 ? x[0] / std::abs(x[0]) : Complex(1.0, 0.0);
    x[0] += phase * alpha;
    const double vnorm = x.norm();
    if (vnorm == 0.0) continue;
    x /= vnorm;
    // H <- (I - 2vv*) H (I - 2vv*)
    auto rows = h.middleRows(k + 1, n - k - 1);
    rows -= 2.0 * x * (x.adjoint() * rows);
    auto cols = h.middleCols(k + 1, n - k - 1);
    cols -= 2.0 * (cols * x) * x.adjoint();
    h.col(k).segment(k + 2, n - k - 2).setZero();
  }
}

struct Givens {
  Complex c, s;  // [c s; -conj(s) c] with c real-valued
};

inline Givens make_givens(Complex a, Complex b) {
  const double r = std::hypot(std::abs(a), std::abs(b));
  if (r == 0.0) return {1.0, 0.0};
  if (std::abs(a) == 0.0) return {0.0, std::conj(b) / std::abs(b)};
  const Complex phase = a / std::abs(a);
  return {std::abs(a) / r, phase * std::conj(b) / r};
}

/// Wilkinson shift from the trailing 2x2 block [a b; c d].
inline Complex wilkinson_shift(Complex a, Complex b, Complex c, Complex d) {
  const Complex tr = a + d;
  const Complex det = a * d - b * c;
  const Complex disc = std::sqrt(tr * tr / 4.0 - det);
  const Complex l1 = tr / 2.0 + disc;
  const Complex l2 = tr / 2.0 - disc;
  return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

}  // namespace detail

/// Eigenvalues of a small square matrix by shifted QR on its Hessenberg form.
inline std::vector<Complex> qr_eigenvalues(const Eigen::MatrixXd& m, int max_iter_per_value = 100) {
  if (m.rows() != m.cols()) throw DimensionError("qr_eigenvalues: matrix must be square");
  const Eigen::Index n = m.rows();
  std::vector<Complex> out;
  if (n == 0) return out;
  if (!m.allFinite()) throw EigensolverError("qr_eigenvalues: non-finite matrix");
  Eigen::MatrixXcd h = m.cast<Complex>();
  detail::to_hessenberg(h);
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = std::max(h.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  Eigen::Index hi = n - 1;
  int iter = 0;
  int total = 0;
  std::vector<detail::Givens> rot(static_cast<std::size_t>(n));
  while (hi >= 0) {
    if (hi == 0) {
      out.push_back(h(0, 0));
      break;
    }
    Eigen::Index lo = hi;
    while (lo > 0) {
      const double sub = std::abs(h(lo, lo - 1));
      const double diag = std::abs(h(lo, lo)) + std::abs(h(lo - 1, lo - 1));
      if (sub <= eps * (diag > 0.0 ? diag : scale)) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      out.push_back(h(hi, hi));
      --hi;
      iter = 0;
      continue;
    }
    if (++iter > max_iter_per_value || ++total > max_iter_per_value * static_cast<int>(n)) {
      throw EigensolverError("shifted QR did not converge");
    }
    Complex mu = detail::wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
    if (iter % 11 == 0) mu = h(hi, hi) + std::abs(h(hi, hi - 1)) * Complex(0.75, 0.5);  // exceptional

    for (Eigen::Index k = lo; k <= hi; ++k) h(k, k) -= mu;
    for (Eigen::Index k = lo; k < hi; ++k) {
      const auto g = detail::make_givens(h(k, k), h(k + 1, k));
      rot[static_cast<std::size_t>(k)] = g;
      for (Eigen::Index j = k; j <= hi; ++j) {
        const Complex a = h(k, j);
        const Complex b = h(k + 1, j);
        h(k, j) = g.c * a + g.s * b;
        h(k + 1, j) = -std::conj(g.s) * a + g.c * b;
      }
    }
    for (Eigen::Index k = lo; k < hi; ++k) {
      const auto& g = rot[static_cast<std::size_t>(k)];
      for (Eigen::Index i = lo; i <= std::min(k + 2, hi); ++i) {
        const Complex a = h(i, k);
        const Complex b = h(i, k + 1);
        h(i, k) = a * g.c + b * std::conj(g.s);
        h(i, k + 1) = -a * g.s + b * g.c;
      }
    }
    for (Eigen::Index k = lo; k <= hi; ++k) h(k, k) += mu;
  }

  // The input is real: pair eigenvalues into exact conjugates and snap
  // numerically-real ones onto the axis.
  const double tol = 1e-10 * std::max(1.0, scale);
  std::vector<bool> used(out.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    if (std::abs(out[i].imag()) <= tol) {
      out[i] = out[i].real();
      continue;
    }
    std::size_t best = out.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(out[j] - std::conj(out[i]));
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best == out.size()) continue;
    used[best] = true;
    const Complex avg = 0.5 * (out[i] + std::conj(out[best]));
    out[i] = avg;
    out[best] = std::conj(avg);
  }
  return out;
}

/// Sorts by decreasing modulus; ties by decreasing real part, then positive
/// imaginary part first.
inline void sort_by_modulus(std::vector<Complex>& values) {
  std::stable_sort(values.begin(), values.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

/// Unit 2-norm with the largest-modulus component rotated onto the positive
/// real axis.
inline Eigen::VectorXcd normalize_eigenvector(Eigen::VectorXcd v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const Complex phase = v[k] / std::abs(v[k]);
  return v / (n * phase);
}

/// One null vector of (m - lambda I) per eigenvalue; clustered eigenvalues
/// share an SVD and take consecutive trailing singular vectors.
inline std::vector<Eigen::VectorXcd> null_vectors(const Eigen::MatrixXd& m,
                                                  const std::vector<Complex>& values) {
  const Eigen::Index n = m.rows();
  const double cluster_tol = 1e-6 * std::max(1.0, m.cwiseAbs().maxCoeff());
  std::vector<Eigen::VectorXcd> out(values.size());
  std::vector<bool> done(values.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (!done[j] && std::abs(values[j] - values[i]) <= cluster_tol) group.push_back(j);
    }
    Complex center = 0.0;
    for (auto g : group) center += values[g];
    center /= static_cast<double>(group.size());
    Eigen::MatrixXcd shifted = m.cast<Complex>();
    shifted.diagonal().array() -= center;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
    const auto& V = svd.matrixV();
    for (std::size_t g = 0; g < group.size(); ++g) {
      out[group[g]] = V.col(n - 1 - static_cast<Eigen::Index>(g));
      done[group[g]] = true;
    }
  }
  return out;
}

enum class EigenvectorSide { Right, Left };

struct SpectralReport {
  /// Nonzero spectrum of K, sorted by decreasing modulus.
  std::vector<Complex> eigenvalues;
  /// Lifted eigenvectors matching `eigenvalues`.
  std::vector<Eigen::VectorXcd> eigenvectors;
  /// Multiplicity of the zero eigenvalue (lifted_dim - rank plus any
  /// numerically zero eigenvalues of B^T A).
  Eigen::Index zero_multiplicity = 0;
  double max_modulus = 0.0;
  bool stable = true;
  /// Largest relative residual |K v - lambda v| / |v| (left: |K^T w - lambda w|).
  double max_residual = 0.0;
  EigenvectorSide side = EigenvectorSide::Right;
};

/// Spectrum of K = A B^T from the r x r matrix B^T A. Right eigenvectors are
/// A u for B^T A u = lambda u; left ones are B u' for A^T B u' = lambda u'.
inline SpectralReport eigen_decompose(const KoopmanModel& model,
                                      EigenvectorSide side = EigenvectorSide::Right) {
  model.validate();
  const Eigen::MatrixXd small = model.B.transpose() * model.A;
  std::vector<Complex> all = qr_eigenvalues(small);
  sort_by_modulus(all);

  const double zero_tol = 1e-12 * std::max(1.0, small.cwiseAbs().maxCoeff());
  SpectralReport report;
  report.side = side;
  report.zero_multiplicity = model.lifted_dim() - model.rank();
  for (const auto& l : all) {
    if (std::abs(l) <= zero_tol) {
      ++report.zero_multiplicity;
    } else {
      report.eigenvalues.push_back(l);
    }
  }
  report.max_modulus = report.eigenvalues.empty() ? 0.0 : std::abs(report.eigenvalues.front());
  report.stable = report.max_modulus < 1.0;

  const Eigen::MatrixXd target = side == EigenvectorSide::Right ? small : Eigen::MatrixXd(small.transpose());
  const Eigen::MatrixXd& lift_map = side == EigenvectorSide::Right ? model.A : model.B;
  const auto us = null_vectors(target, report.eigenvalues);
  const Eigen::MatrixXcd lift_c = lift_map.cast<Complex>();
  for (std::size_t i = 0; i < us.size(); ++i) {
    Eigen::VectorXcd v = normalize_eigenvector(lift_c * us[i]);
    // K v = A (B^T v); K^T w = B (A^T w)
    const Eigen::VectorXcd kv = side == EigenvectorSide::Right
                                    ? Eigen::VectorXcd(model.A.cast<Complex>() * (model.B.transpose().cast<Complex>() * v))
                                    : Eigen::VectorXcd(model.B.cast<Complex>() * (model.A.transpose().cast<Complex>() * v));
    const double res = (kv - report.eigenvalues[i] * v).norm() / std::max(v.norm(), 1e-300);
    report.max_residual = std::max(report.max_residual, res);
    report.eigenvectors.push_back(std::move(v));
  }
  return report;
}

/// Index of the eigenvalue with the largest modulus (always 0 after sorting).
inline std::size_t leading_index(const SpectralReport& report) {
  if (report.eigenvalues.empty()) throw InputError("spectrum has no nonzero eigenvalue");
  return 0;
}

/// phi_i(x) = v_i^T lift(y) with y = predict(x) - x, evaluated in the
/// model's own coordinates. Plain transpose, no conjugation.
inline std::vector<Complex> eigenfunction_grid(const KoopmanModel& model, const SpectralReport& report,
                                               std::size_t eig_index, const Trajectory& grid) {
  if (eig_index >= report.eigenvectors.size()) {
    throw InputError("eigenfunction index " + std::to_string(eig_index) + " out of range (" +
                     std::to_string(report.eigenvectors.size()) + " nonzero eigenvalues)");
  }
  const Eigen::VectorXcd& v = report.eigenvectors[eig_index];
  std::vector<Complex> out;
  out.reserve(grid.size());
  for (const auto& x : grid) {
    require_dim(x, model.dim(), "eigenfunction grid");
    const State u = model.to_model(x);
    const State y = predict_model_state(model, u) - u;
    const Eigen::VectorXd z = lift(model.lifting, y);
    out.push_back(v.transpose() * z.cast<Complex>());
  }
  return out;
}

}  // namespace koopmotion
