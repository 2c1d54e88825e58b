#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <random>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"

namespace koopmotion {

/// Learnable Fourier-feature observables: the state itself followed by
/// cos(w_j . x + b_j) for j = 0..nu-1.
struct LiftingParams {
  Eigen::MatrixXd W;  // nu x d frequencies, one feature per row
  Eigen::VectorXd b;  // nu phases (radians)

  Eigen::Index dim() const { return W.cols(); }
  Eigen::Index features() const { return W.rows(); }
  Eigen::Index lifted_dim() const { return W.rows() + W.cols(); }

  void validate() const {
    if (b.size() != W.rows()) {
      throw DimensionError("lifting: " + std::to_string(W.rows()) + " frequency rows but " +
                           std::to_string(b.size()) + " biases");
    }
    if (W.cols() < 1) throw DimensionError("lifting: state dimension must be >= 1");
  }

  /// Frequencies ~ N(0, frequency_scale^2), phases ~ U[0, 2pi).
  template <class Rng>
  static LiftingParams random(Eigen::Index d, Eigen::Index nu, double frequency_scale, Rng& rng) {
    LiftingParams p;
    p.W.resize(nu, d);
    p.b.resize(nu);
    std::normal_distribution<double> normal(0.0, frequency_scale);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index j = 0; j < nu; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) p.W(j, i) = normal(rng);
    }
    for (Eigen::Index j = 0; j < nu; ++j) p.b[j] = phase(rng);
    return p;
  }
};

/// Feature phases s_j = w_j . x + b_j.
inline Eigen::VectorXd feature_phases(const LiftingParams& params, const State& x) {
  return params.W * x + params.b;
}

inline Eigen::VectorXd lift(const LiftingParams& params, const State& x) {
  require_dim(x, params.dim(), "lift");
  const Eigen::Index d = params.dim();
  Eigen::VectorXd z(params.lifted_dim());
  z.head(d) = x;
  z.tail(params.features()) = feature_phases(params, x).array().cos().matrix();
  return z;
}

/// d(lift)/dx: identity on top, row d+j is -sin(s_j) w_j^T.
inline Eigen::MatrixXd lift_jacobian(const LiftingParams& params, const State& x) {
  require_dim(x, params.dim(), "lift_jacobian");
  const Eigen::Index d = params.dim();
  Eigen::MatrixXd J(params.lifted_dim(), d);
  J.topRows(d).setIdentity();
  const Eigen::VectorXd sin_s = feature_phases(params, x).array().sin().matrix();
  J.bottomRows(params.features()) = -(sin_s.asDiagonal() * params.W);
  return J;
}

}  // namespace koopmotion
