#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace koopmotion {

struct LossWeights {
  double beta_k = 1.0;
  double beta_d = 0.01;
  double beta_g = 0.01;

  void validate() const {
    if (beta_k < 0.0 || beta_d < 0.0 || beta_g < 0.0) {
      throw InputError("loss weights must be non-negative");
    }
    if (beta_k == 0.0 && beta_d == 0.0 && beta_g == 0.0) {
      throw InputError("at least one loss weight must be positive");
    }
  }
};

struct LossBreakdown {
  double koopman = 0.0;
  double flow_divergence = 0.0;
  double goal = 0.0;
  double total = 0.0;
};

/// Gradient of the total loss; same shapes as the learnable tensors.
struct ParameterGradient {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
  Eigen::MatrixXd dA;
  Eigen::MatrixXd dB;

  static ParameterGradient zeros_like(const KoopmanModel& m) {
    return {Eigen::MatrixXd::Zero(m.lifting.W.rows(), m.lifting.W.cols()),
            Eigen::VectorXd::Zero(m.lifting.b.size()),
            Eigen::MatrixXd::Zero(m.A.rows(), m.A.cols()),
            Eigen::MatrixXd::Zero(m.B.rows(), m.B.cols())};
  }

  bool all_finite() const {
    return dW.allFinite() && db.allFinite() && dA.allFinite() && dB.allFinite();
  }

  double squared_norm() const {
    return dW.squaredNorm() + db.squaredNorm() + dA.squaredNorm() + dB.squaredNorm();
  }
};

// All losses below operate in the model's own coordinates: batch states,
// divergence points and the goal must already be normalized when the model
// carries a normalization (the trainer does this).

/// Mean over pairs and lifted coordinates of |lift(x_k1) - K lift(x_k)|^2.
inline double loss_koopman(const KoopmanModel& model, std::span<const TrainingPair> batch) {
  if (batch.empty()) throw InsufficientDataError("loss_koopman: empty batch");
  double sum = 0.0;
  for (const auto& pair : batch) {
    const Eigen::VectorXd z0 = lift(model.lifting, pair.x_k);
    const Eigen::VectorXd z1 = lift(model.lifting, pair.x_k1);
    sum += (z1 - predict_lifted(model, z0)).squaredNorm();
  }
  return sum / (static_cast<double>(batch.size()) * static_cast<double>(model.lifted_dim()));
}

/// Mean over points of the squared divergence of the unscaled field.
inline double loss_divergence(const KoopmanModel& model, std::span<const State> points) {
  if (points.empty()) throw InsufficientDataError("loss_divergence: no points");
  const DivergenceTerms terms(model);
  double sum = 0.0;
  for (const auto& u : points) {
    require_dim(u, model.dim(), "loss_divergence");
    const double div = terms.at(model, u);
    sum += div * div;
  }
  return sum / static_cast<double>(points.size());
}

/// Mean over lifted coordinates of |lift(g) - K lift(g)|^2.
inline double loss_goal(const KoopmanModel& model, const State& goal) {
  require_dim(goal, model.dim(), "loss_goal");
  const Eigen::VectorXd z = lift(model.lifting, goal);
  return (z - predict_lifted(model, z)).squaredNorm() / static_cast<double>(model.lifted_dim());
}

inline LossBreakdown total_loss(const KoopmanModel& model, std::span<const TrainingPair> batch,
                                std::span<const State> div_points, const State& goal,
                                const LossWeights& weights) {
  LossBreakdown out;
  out.koopman = loss_koopman(model, batch);
  out.flow_divergence = loss_divergence(model, div_points);
  out.goal = loss_goal(model, goal);
  out.total = weights.beta_k * out.koopman + weights.beta_d * out.flow_divergence +
              weights.beta_g * out.goal;
  return out;
}

namespace detail {

/// Pushes dL/dz at lifted point z = lift(x) back onto W and b. Only the
/// feature block depends on parameters.
inline void backprop_lift(const KoopmanModel& model, const State& x, const Eigen::VectorXd& dz,
                          const Eigen::VectorXd& sin_s, ParameterGradient& grad) {
  const Eigen::VectorXd factor = -(dz.tail(model.features()).array() * sin_s.array()).matrix();
  grad.dW.noalias() += factor * x.transpose();
  grad.db += factor;
}

inline Eigen::VectorXd sines(const KoopmanModel& model, const State& x) {
  return feature_phases(model.lifting, x).array().sin().matrix();
}

}  // namespace detail

/// Adds weight * d(loss_koopman)/dtheta to `grad`; returns the unweighted loss.
inline double add_koopman_gradient(const KoopmanModel& model, std::span<const TrainingPair> batch,
                                   double weight, ParameterGradient& grad) {
  if (batch.empty()) throw InsufficientDataError("loss_koopman: empty batch");
  const double c =
      2.0 * weight / (static_cast<double>(batch.size()) * static_cast<double>(model.lifted_dim()));
  double sum = 0.0;
  for (const auto& pair : batch) {
    const Eigen::VectorXd z0 = lift(model.lifting, pair.x_k);
    const Eigen::VectorXd z1 = lift(model.lifting, pair.x_k1);
    const Eigen::VectorXd q = model.B.transpose() * z0;
    const Eigen::VectorXd e = z1 - model.A * q;
    sum += e.squaredNorm();
    const Eigen::VectorXd t = model.A.transpose() * e;
    grad.dA.noalias() -= c * e * q.transpose();
    grad.dB.noalias() -= c * z0 * t.transpose();
    detail::backprop_lift(model, pair.x_k1, c * e, detail::sines(model, pair.x_k1), grad);
    detail::backprop_lift(model, pair.x_k, -c * (model.B * t), detail::sines(model, pair.x_k),
                          grad);
  }
  return sum / (static_cast<double>(batch.size()) * static_cast<double>(model.lifted_dim()));
}

/// Adds weight * d(loss_goal)/dtheta to `grad`; returns the unweighted loss.
inline double add_goal_gradient(const KoopmanModel& model, const State& goal, double weight,
                                ParameterGradient& grad) {
  require_dim(goal, model.dim(), "loss_goal");
  const double c = 2.0 * weight / static_cast<double>(model.lifted_dim());
  const Eigen::VectorXd z = lift(model.lifting, goal);
  const Eigen::VectorXd q = model.B.transpose() * z;
  const Eigen::VectorXd e = z - model.A * q;
  const Eigen::VectorXd t = model.A.transpose() * e;
  grad.dA.noalias() -= c * e * q.transpose();
  grad.dB.noalias() -= c * z * t.transpose();
  detail::backprop_lift(model, goal, c * (e - model.B * t), detail::sines(model, goal), grad);
  return e.squaredNorm() / static_cast<double>(model.lifted_dim());
}

/// Adds weight * d(loss_divergence)/dtheta to `grad`; returns the unweighted loss.
///
/// With delta_n = 2 div_n / N and J_n the lifting Jacobian at point n:
///   dA_top += sum_n delta_n J_n^T B
///   dB     += sum_n delta_n J_n A_top
///   dW_j   += sum_n delta_n (-cos(s_nj) h_j x_n - sin(s_nj) G_{d+j,:})
///   db_j   += sum_n delta_n (-cos(s_nj) h_j)
/// The sums over n are folded into the scalars/vectors below before the
/// matrix products.
inline double add_divergence_gradient(const KoopmanModel& model, std::span<const State> points,
                                      double weight, ParameterGradient& grad) {
  if (points.empty()) throw InsufficientDataError("loss_divergence: no points");
  const Eigen::Index d = model.dim();
  const Eigen::Index nu = model.features();
  const DivergenceTerms terms(model);
  const double n = static_cast<double>(points.size());

  double delta_sum = 0.0;
  Eigen::VectorXd sin_weighted = Eigen::VectorXd::Zero(nu);
  Eigen::MatrixXd dW_cos = Eigen::MatrixXd::Zero(nu, d);
  Eigen::VectorXd db = Eigen::VectorXd::Zero(nu);
  double sum = 0.0;
  for (const auto& u : points) {
    require_dim(u, d, "loss_divergence");
    const Eigen::VectorXd s = feature_phases(model.lifting, u);
    const Eigen::VectorXd sin_s = s.array().sin().matrix();
    const double div = terms.trace_top - sin_s.dot(terms.h) - static_cast<double>(d);
    sum += div * div;
    const double delta = 2.0 * weight * div / n;
    delta_sum += delta;
    sin_weighted += delta * sin_s;
    const Eigen::VectorXd cos_h = (s.array().cos() * terms.h.array()).matrix();
    dW_cos.noalias() -= delta * cos_h * u.transpose();
    db -= delta * cos_h;
  }

  const auto A_top = model.A.topRows(d);
  const auto B_top = model.B.topRows(d);
  const auto B_feat = model.B.bottomRows(nu);
  const auto& W = model.lifting.W;

  grad.dA.topRows(d) += delta_sum * B_top - W.transpose() * (sin_weighted.asDiagonal() * B_feat);
  grad.dB.topRows(d) += delta_sum * A_top;
  grad.dB.bottomRows(nu) -= sin_weighted.asDiagonal() * (W * A_top);
  grad.dW += dW_cos - sin_weighted.asDiagonal() * terms.G.bottomRows(nu);
  grad.db += db;
  return sum / n;
}

struct LossAndGradient {
  LossBreakdown loss;
  ParameterGradient grad;
};

/// Exact gradient of `total_loss` with respect to W, b, A and B. Terms with a
/// zero weight are skipped entirely, so they contribute exactly nothing.
inline LossAndGradient gradients(const KoopmanModel& model, std::span<const TrainingPair> batch,
                                 std::span<const State> div_points, const State& goal,
                                 const LossWeights& weights) {
  LossAndGradient out{{}, ParameterGradient::zeros_like(model)};
  auto& l = out.loss;
  if (weights.beta_k != 0.0) {
    l.koopman = add_koopman_gradient(model, batch, weights.beta_k, out.grad);
  } else {
    l.koopman = loss_koopman(model, batch);
  }
  if (weights.beta_d != 0.0) {
    l.flow_divergence = add_divergence_gradient(model, div_points, weights.beta_d, out.grad);
  } else {
    l.flow_divergence = loss_divergence(model, div_points);
  }
  if (weights.beta_g != 0.0) {
    l.goal = add_goal_gradient(model, goal, weights.beta_g, out.grad);
  } else {
    l.goal = loss_goal(model, goal);
  }
  l.total = weights.beta_k * l.koopman + weights.beta_d * l.flow_divergence +
            weights.beta_g * l.goal;
  return out;
}

}  // namespace koopmotion
