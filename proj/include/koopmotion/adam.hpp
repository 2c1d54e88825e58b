#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "koopmotion/errors.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/losses.hpp"

namespace koopmotion {

struct AdamSettings {
  double learning_rate = 8e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators for one tensor.
struct AdamMoments {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  static AdamMoments zeros(Eigen::Index rows, Eigen::Index cols) {
    return {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)};
  }
};

/// Bias-corrected Adam update of one tensor; `step` is the 1-based count of
/// updates including this one.
template <class Param, class Grad>
void adam_update(Eigen::MatrixBase<Param>& param, const Eigen::MatrixBase<Grad>& grad,
                 AdamMoments& moments, std::int64_t step, const AdamSettings& s) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      moments.m.rows() != grad.rows() || moments.m.cols() != grad.cols()) {
    throw DimensionError("adam: parameter, gradient and moment shapes differ");
  }
  moments.m = s.beta1 * moments.m + (1.0 - s.beta1) * grad;
  moments.v = s.beta2 * moments.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double m_corr = 1.0 - std::pow(s.beta1, static_cast<double>(step));
  const double v_corr = 1.0 - std::pow(s.beta2, static_cast<double>(step));
  param -= (s.learning_rate * (moments.m.array() / m_corr) /
            ((moments.v.array() / v_corr).sqrt() + s.epsilon))
               .matrix();
}

/// Optimizer state for the four learnable tensors of a `KoopmanModel`.
struct AdamState {
  AdamMoments W, b, A, B;
  std::int64_t step = 0;

  static AdamState for_model(const KoopmanModel& model) {
    return {AdamMoments::zeros(model.lifting.W.rows(), model.lifting.W.cols()),
            AdamMoments::zeros(model.lifting.b.size(), 1),
            AdamMoments::zeros(model.A.rows(), model.A.cols()),
            AdamMoments::zeros(model.B.rows(), model.B.cols()), 0};
  }
};

inline void adam_step(KoopmanModel& model, const ParameterGradient& grad, AdamState& state,
                      const AdamSettings& settings) {
  ++state.step;
  adam_update(model.lifting.W, grad.dW, state.W, state.step, settings);
  adam_update(model.lifting.b, grad.db, state.b, state.step, settings);
  adam_update(model.A, grad.dA, state.A, state.step, settings);
  adam_update(model.B, grad.dB, state.B, state.step, settings);
}

}  // namespace koopmotion
