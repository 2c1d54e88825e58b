#pragma once

#include <random>

#include "koopmotion/koopman_model.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace testing_support {

using koopmotion::KoopmanModel;
using koopmotion::State;

/// Model with all entries ~ N(0, sigma); W uses `w_sigma`.
inline KoopmanModel random_model(Eigen::Index d, Eigen::Index nu, Eigen::Index r, std::mt19937_64& rng,
                                 double sigma = 0.5, double w_sigma = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  KoopmanModel m;
  m.lifting.W = Eigen::MatrixXd::NullaryExpr(nu, d, [&] { return w_sigma * n(rng); });
  m.lifting.b = Eigen::VectorXd::NullaryExpr(nu, [&] { return n(rng); });
  m.A = Eigen::MatrixXd::NullaryExpr(nu + d, r, [&] { return sigma * n(rng); });
  m.B = Eigen::MatrixXd::NullaryExpr(nu + d, r, [&] { return sigma * n(rng); });
  m.model_dt = 1.0;
  m.domain_box.lo = State::Constant(d, -1.0);
  m.domain_box.hi = State::Constant(d, 1.0);
  return m;
}

inline State random_point(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return State::NullaryExpr(d, [&] { return u(rng); });
}

}  // namespace testing_support
