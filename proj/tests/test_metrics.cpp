#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "koopmotion/metrics.hpp"
#include "koopmotion/synthetic.hpp"
#include "koopmotion/trainer.hpp"

using namespace koopmotion;

namespace {

Trajectory random_traj(std::size_t n, std::mt19937_64& rng, Eigen::Index d = 2) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(State::NullaryExpr(d, [&] { return u(rng); }));
  return t;
}

/// Minimum cost over every monotone alignment path, by explicit recursion.
double brute_force_dtw(const Trajectory& a, const Trajectory& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += (a[i] - b[j]).norm();
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

double shoelace(const State& p, const State& q, const State& r) {
  return 0.5 * std::abs(p[0] * (q[1] - r[1]) + q[0] * (r[1] - p[1]) + r[0] * (p[1] - q[1]));
}

double sea_oracle(const Trajectory& d, const Trajectory& p) {
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < d.size(); ++t) {
    s += shoelace(d[t], d[t + 1], p[t + 1]) + shoelace(d[t], p[t + 1], p[t]);
  }
  return s;
}

}  // namespace

TEST(Dtw, HandComputedCases) {
  const Trajectory a{State{{0.0, 0.0}}};
  const Trajectory b{State{{3.0, 4.0}}};
  EXPECT_DOUBLE_EQ(dtwd(a, b), 5.0);
  std::mt19937_64 rng(1);
  const auto t = random_traj(8, rng);
  EXPECT_EQ(dtwd(t, t), 0.0);
  EXPECT_THROW(dtwd({}, t), InputError);
}

TEST(Dtw, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_traj(len(rng), rng);
    const auto b = random_traj(len(rng), rng);
    EXPECT_EQ(dtwd(a, b), brute_force_dtw(a, b));
  }
}

TEST(Dtw, SymmetricAndNonNegative) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_traj(7, rng, 3);
    const auto b = random_traj(11, rng, 3);
    EXPECT_GE(dtwd(a, b), 0.0);
    EXPECT_NEAR(dtwd(a, b), dtwd(b, a), 1e-12);
  }
}

TEST(Sea, HandComputedCases) {
  const Trajectory demo{State{{0.0, 0.0}}, State{{1.0, 0.0}}};
  const Trajectory pred{State{{0.0, 1.0}}, State{{1.0, 1.0}}};
  EXPECT_DOUBLE_EQ(sea(demo, pred), 1.0);
  EXPECT_EQ(sea(demo, demo), 0.0);
  EXPECT_THROW(sea(demo, Trajectory{State{{0.0, 0.0}}}), InputError);
}

TEST(Sea, MatchesShoelaceOracle) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_traj(2 + i % 20, rng);
    const auto b = random_traj(a.size(), rng);
    const double ref = sea_oracle(a, b);
    EXPECT_NEAR(sea(a, b), ref, 1e-12 * std::max(1.0, ref));
  }
}

TEST(Sea, TranslationAndScaling) {
  std::mt19937_64 rng(5);
  const auto a = random_traj(10, rng);
  const auto b = random_traj(10, rng);
  const State shift{{3.5, -7.25}};
  Trajectory at, bt, as, bs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    at.push_back(a[i] + shift);
    bt.push_back(b[i] + shift);
    as.push_back(2.5 * a[i]);
    bs.push_back(2.5 * b[i]);
  }
  EXPECT_NEAR(sea(at, bt), sea(a, b), 1e-10);
  EXPECT_NEAR(sea(as, bs), 6.25 * sea(a, b), 1e-10);
}

TEST(Sea, ThreeDimensionalTriangles) {
  EXPECT_DOUBLE_EQ(triangle_area(State{{0.0, 0.0, 0.0}}, State{{1.0, 0.0, 0.0}}, State{{0.0, 0.0, 2.0}}), 1.0);
}

TEST(Resample, StraightSegmentThreePoints) {
  const auto r = resample_to({State{{0.0, 0.0}}, State{{1.0, 0.0}}}, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[1][0], 0.5, 1e-15);
  EXPECT_EQ(r[2], State(State{{1.0, 0.0}}));
}

TEST(Resample, UniformLineIsIdentity) {
  Trajectory t;
  for (int i = 0; i < 9; ++i) t.push_back(State{{0.5 * i, -0.25 * i}});
  const auto r = resample_to(t, t.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_LT((r[i] - t[i]).norm(), 1e-12);
}

TEST(Resample, PointsLieOnPolyline) {
  std::mt19937_64 rng(6);
  const auto poly = random_traj(12, rng);
  const auto r = resample_to(poly, 100);
  ASSERT_EQ(r.size(), 100u);
  EXPECT_EQ(r.front(), poly.front());
  EXPECT_EQ(r.back(), poly.back());
  for (const auto& p : r) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
      const State ab = poly[i + 1] - poly[i];
      const double w = std::clamp((p - poly[i]).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (p - (poly[i] + w * ab)).norm());
    }
    EXPECT_LT(best, 1e-9);
  }
}

TEST(Resample, DegenerateInputsRaise) {
  EXPECT_THROW(resample_to({State{{1.0, 1.0}}, State{{1.0, 1.0}}}, 5), InputError);
  EXPECT_THROW(resample_to({State{{1.0, 1.0}}}, 5), InputError);
}

TEST(Evaluate, ExactPredictionsScoreZero) {
  const auto set = synthetic::s_curve(3, 200);
  std::vector<Trajectory> preds;
  for (const auto& d : set.demos()) preds.push_back(d.points);
  const auto rep = evaluate_predictions(set, preds);
  EXPECT_EQ(rep.evaluated, 3u);
  for (double v : rep.per_demo_sea) EXPECT_LT(v, 1e-9);
  EXPECT_LT(rep.mean_dtwd, 1e-9);
  EXPECT_FALSE(rep.dtw_normalized);
}

TEST(Evaluate, MeanAndStdConsistent) {
  const auto set = synthetic::s_curve(3, 100);
  std::vector<Trajectory> preds;
  for (std::size_t i = 0; i < set.demos().size(); ++i) {
    Trajectory p;
    for (const auto& x : set.demos()[i].points) p.push_back(x + State::Constant(2, 1.0 + i));
    preds.push_back(p);
  }
  const auto rep = evaluate_predictions(set, preds);
  double mean = 0.0;
  for (double v : rep.per_demo_dtwd) mean += v / 3.0;
  double var = 0.0;
  for (double v : rep.per_demo_dtwd) var += (v - mean) * (v - mean) / 3.0;
  EXPECT_NEAR(rep.mean_dtwd, mean, 1e-9 * mean);
  EXPECT_NEAR(rep.std_dtwd, std::sqrt(var), 1e-9 * mean);
}

TEST(Evaluate, StraightLineFixtureHasSmallSweptArea) {
  const auto full = synthetic::straight_line(1000, 0.01);
  const auto sub = subsample(full, 40);
  TrainingConfig c;
  c.nu = 64;
  c.rank = 16;
  c.epochs = 300;
  const auto trained = train(sub, c);
  const auto rep = evaluate(FlowField(trained.model), full, 40, RolloutDefaults::for_set(full));
  const State ext = full.domain_box().hi - full.domain_box().lo;
  EXPECT_EQ(rep.evaluated, 1u);
  EXPECT_LT(rep.mean_sea, 0.05 * ext[0] * ext[1]);
}
