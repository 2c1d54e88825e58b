#include <gtest/gtest.h>

#include <random>

#include "koopmotion/koopman_model.hpp"
#include "koopmotion/lifting.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace koopmotion;
using testing_support::random_model;
using testing_support::random_point;

TEST(Lifting, StateBlockThenCosines) {
  LiftingParams p;
  p.W = Eigen::MatrixXd{{1.0, 0.0}, {0.0, 2.0}, {1.0, 1.0}};
  p.b = Eigen::VectorXd{{0.0, 0.5, -1.0}};
  const State x{{0.3, -0.4}};
  const Eigen::VectorXd z = lift(p, x);
  ASSERT_EQ(z.size(), 5);
  EXPECT_EQ(z.head(2), x);
  EXPECT_DOUBLE_EQ(z[2], std::cos(0.3));
  EXPECT_DOUBLE_EQ(z[3], std::cos(-0.8 + 0.5));
  EXPECT_DOUBLE_EQ(z[4], std::cos(-0.1 - 1.0));
}

TEST(Lifting, ZeroFeaturesIsIdentity) {
  LiftingParams p;
  p.W = Eigen::MatrixXd::Zero(0, 3);
  p.b = Eigen::VectorXd::Zero(0);
  const State x{{1.0, 2.0, 3.0}};
  EXPECT_EQ(lift(p, x), x);
}

TEST(Lifting, DimensionMismatchRaises) {
  std::mt19937_64 rng(1);
  const auto p = LiftingParams::random(2, 4, 1.0, rng);
  EXPECT_THROW(lift(p, State{{1.0}}), DimensionError);
}

TEST(Lifting, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const auto p = LiftingParams::random(3, 6, 1.0, rng);
  const State x = random_point(3, rng);
  const Eigen::MatrixXd J = lift_jacobian(p, x);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    State a = x, b = x;
    a[i] += h;
    b[i] -= h;
    const Eigen::VectorXd col = (lift(p, a) - lift(p, b)) / (2 * h);
    EXPECT_LT((J.col(i) - col).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Lifting, RandomIsSeedDeterministic) {
  std::mt19937_64 a(5), b(5);
  const auto pa = LiftingParams::random(2, 8, 0.5, a);
  const auto pb = LiftingParams::random(2, 8, 0.5, b);
  EXPECT_EQ(pa.W, pb.W);
  EXPECT_EQ(pa.b, pb.b);
  EXPECT_GE(pa.b.minCoeff(), 0.0);
  EXPECT_LT(pa.b.maxCoeff(), 2.0 * 3.141592653589794);
}

TEST(Model, IdentityOperatorGivesZeroField) {
  std::mt19937_64 rng(2);
  auto m = random_model(2, 5, 7, rng);
  m.A = Eigen::MatrixXd::Identity(7, 7);
  m.B = m.A;
  const FlowField f(m);
  const State x = random_point(2, rng);
  EXPECT_LT(vector_field(f, x).norm(), 1e-14);
  EXPECT_NEAR(divergence(f, x), 0.0, 1e-14);
}

TEST(Model, PredictStateMatchesOracle) {
  std::mt19937_64 rng(6);
  const auto m = random_model(3, 4, 2, rng);
  const State x = random_point(3, rng);
  const auto ref = oracle::field(oracle::from_model(m), oracle::to_vec(x));
  const State f = vector_field(FlowField(m), x);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(f[i], static_cast<double>(ref[i]), 1e-13);
}

TEST(Model, DivergenceMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto m = random_model(1 + t % 3, 1 + t % 8, 1 + t % 4, rng);
    const State x = random_point(m.dim(), rng);
    const double fd = static_cast<double>(oracle::divergence_fd(oracle::from_model(m), oracle::to_vec(x)));
    worst = std::max(worst, std::abs(divergence(FlowField(m), x) - fd));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Model, DivergenceScalesWithFieldScale) {
  std::mt19937_64 rng(12);
  const auto m = random_model(2, 6, 3, rng);
  const State x = random_point(2, rng);
  const FlowField f(m);
  EXPECT_NEAR(divergence(f.with_scale(2.5), x), 2.5 * divergence(f, x), 1e-12);
}

TEST(Model, DivergenceInvariantUnderNormalization) {
  // A model in normalized coordinates seen through the affine map has the
  // same divergence as the model itself evaluated at the mapped point.
  std::mt19937_64 rng(13);
  auto m = random_model(2, 6, 3, rng);
  m.domain_box = BoundingBox{State{{-50.0, -20.0}}, State{{10.0, 20.0}}};
  m.normalization = AffineNormalization::fit(m.domain_box);
  const State x{{-20.0, 5.0}};
  const double h = 1e-4;
  double fd = 0.0;
  const FlowField f(m);
  for (int i = 0; i < 2; ++i) {
    State a = x, b = x;
    a[i] += h;
    b[i] -= h;
    fd += (vector_field(f, a)[i] - vector_field(f, b)[i]) / (2 * h);
  }
  EXPECT_NEAR(divergence(f, x), fd, 1e-6);
}

TEST(Model, ScaleToSpeedCapsProbedSpeed) {
  std::mt19937_64 rng(14);
  auto m = random_model(2, 6, 3, rng);
  m.model_dt = 0.4;
  const auto probe = grid_points(m.domain_box, {7, 7});
  const FlowField f = scale_to_speed(FlowField(m), 0.5, probe);
  double top = 0.0;
  for (const auto& x : probe) top = std::max(top, vector_field(f, x).norm() / m.model_dt);
  EXPECT_NEAR(top, 0.5, 1e-12);
}

TEST(Model, ScaleToSpeedOnZeroFieldRaises) {
  std::mt19937_64 rng(15);
  auto m = random_model(2, 3, 5, rng);
  m.A = Eigen::MatrixXd::Identity(5, 5);
  m.B = m.A;
  EXPECT_THROW(scale_to_speed(FlowField(m), 1.0, {State{{0.1, 0.1}}}), DegenerateFieldError);
}

TEST(Model, ValidateRejectsBadShapes) {
  std::mt19937_64 rng(16);
  auto m = random_model(2, 3, 2, rng);
  m.B = Eigen::MatrixXd::Zero(4, 2);
  EXPECT_THROW(m.validate(), DimensionError);
}
