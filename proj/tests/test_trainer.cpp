#include <gtest/gtest.h>

#include "koopmotion/adam.hpp"
#include "koopmotion/synthetic.hpp"
#include "koopmotion/trainer.hpp"

using namespace koopmotion;

namespace {

DemonstrationSet line_set(int n_demos, int points) {
  std::vector<Demonstration> demos;
  for (int i = 0; i < n_demos; ++i) {
    Demonstration d;
    d.id = "l" + std::to_string(i);
    d.dt = 1.0;
    const State start{{1.0, 0.2 * i - 0.3}};
    for (int k = 0; k < points; ++k) {
      const double s = static_cast<double>(k) / (points - 1);
      d.points.push_back((1.0 - s) * start);
    }
    demos.push_back(d);
  }
  return DemonstrationSet::make(demos);
}

TrainingConfig small_config() {
  TrainingConfig c;
  c.nu = 16;
  c.rank = 6;
  c.epochs = 5;
  c.batch_size = 8;
  c.normalize = true;
  return c;
}

}  // namespace

TEST(Trainer, BatchesPerEpochCeil) {
  EXPECT_EQ(batches_per_epoch(168, 16), 11u);
  EXPECT_EQ(batches_per_epoch(160, 16), 10u);
  EXPECT_EQ(batches_per_epoch(5, 16), 1u);
  EXPECT_EQ(batches_per_epoch(0, 16), 0u);
}

TEST(Trainer, DefaultScheduleOnSubsampledCorpusIs2200Iterations) {
  const auto sub = subsample(synthetic::s_curve(), 40);
  TrainingConfig c;
  c.nu = 4;
  c.rank = 2;
  const auto result = train(sub, c);
  EXPECT_EQ(result.report.pairs, 168u);
  EXPECT_EQ(result.report.batches_per_epoch, 11u);
  EXPECT_EQ(result.report.history.size(), 2200u);
}

TEST(Trainer, ZeroEpochsReturnsInitialModel) {
  const auto set = line_set(2, 6);
  auto c = small_config();
  c.epochs = 0;
  const auto result = train(set, c);
  EXPECT_TRUE(result.report.history.empty());
  const PreparedData data = prepare_training_data(set, c);
  std::mt19937_64 rng(c.seed);
  const KoopmanModel init = initial_model(data, set, c, rng);
  EXPECT_EQ(result.model.A, init.A);
  EXPECT_EQ(result.model.lifting.W, init.lifting.W);
}

TEST(Trainer, SameSeedIsBitwiseDeterministic) {
  const auto set = line_set(3, 8);
  const auto a = train(set, small_config());
  const auto b = train(set, small_config());
  EXPECT_EQ(a.model.A, b.model.A);
  EXPECT_EQ(a.model.B, b.model.B);
  EXPECT_EQ(a.model.lifting.W, b.model.lifting.W);
  EXPECT_EQ(a.model.lifting.b, b.model.lifting.b);
  for (std::size_t i = 0; i < a.report.history.size(); ++i) {
    EXPECT_EQ(a.report.history[i].total, b.report.history[i].total);
  }
}

TEST(Trainer, DifferentSeedsDiffer) {
  const auto set = line_set(3, 8);
  auto c = small_config();
  const auto a = train(set, c);
  c.seed = 1;
  const auto b = train(set, c);
  EXPECT_NE(a.model.A, b.model.A);
}

TEST(Trainer, StraightLineLossDropsBelowOnePercent) {
  const auto set = line_set(3, 11);
  auto c = small_config();
  c.nu = 32;
  c.rank = 8;
  c.epochs = 400;
  c.learning_rate = 5e-3;
  const auto result = train(set, c);
  const double first = result.report.history.front().total;
  const double last = result.report.history.back().total;
  EXPECT_LT(last, 0.01 * first);
}

TEST(Trainer, OnlyKoopmanTermWhenOtherWeightsZero) {
  // With beta_d = beta_g = 0 the run must match one driven purely by the
  // Koopman gradient.
  const auto set = line_set(2, 7);
  auto c = small_config();
  c.weights = {1.0, 0.0, 0.0};
  const auto result = train(set, c);

  const PreparedData data = prepare_training_data(set, c);
  std::mt19937_64 rng(c.seed);
  KoopmanModel m = initial_model(data, set, c, rng);
  AdamState adam = AdamState::for_model(m);
  std::vector<std::size_t> order(data.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min<std::size_t>(c.batch_size, data.pairs.size());
  for (int e = 0; e < c.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size(); first += batch) {
      std::vector<TrainingPair> pairs;
      for (std::size_t i = first; i < std::min(first + batch, order.size()); ++i) {
        pairs.push_back(data.pairs[order[i]]);
      }
      auto g = ParameterGradient::zeros_like(m);
      add_koopman_gradient(m, pairs, 1.0, g);
      adam_step(m, g, adam, c.adam());
    }
  }
  EXPECT_EQ(result.model.A, m.A);
  EXPECT_EQ(result.model.B, m.B);
  EXPECT_EQ(result.model.lifting.W, m.lifting.W);
  EXPECT_EQ(result.model.lifting.b, m.lifting.b);
}

TEST(Trainer, NonFiniteLossRaisesDivergedTraining) {
  const auto set = line_set(2, 6);
  auto c = small_config();
  c.learning_rate = 1e300;
  EXPECT_THROW(train(set, c), DivergedTrainingError);
}

TEST(Trainer, RankAboveLiftedDimensionRaises) {
  auto c = small_config();
  c.nu = 2;
  c.rank = 5;
  EXPECT_THROW(train(line_set(2, 6), c), InputError);
}

TEST(Trainer, ConfigJsonRoundTripAndUnknownKey) {
  TrainingConfig c = small_config();
  c.weights.beta_d = 0.5;
  c.clip_norm = 3.0;
  const nlohmann::json j = c;
  const auto back = j.get<TrainingConfig>();
  EXPECT_EQ(back.nu, c.nu);
  EXPECT_EQ(back.weights.beta_d, 0.5);
  EXPECT_EQ(*back.clip_norm, 3.0);
  EXPECT_THROW((nlohmann::json{{"nuu", 3}}.get<TrainingConfig>()), InputError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, 0.3);
  auto mom = AdamMoments::zeros(1, 1);
  const AdamSettings s{0.1, 0.9, 0.999, 0.0};
  adam_update(p, g, mom, 1, s);
  EXPECT_NEAR(p(0, 0), 0.9, 1e-15);
}

TEST(Adam, ScalarSequenceMatchesHandComputation) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 1, 0.0);
  auto mom = AdamMoments::zeros(1, 1);
  const AdamSettings s{0.01, 0.9, 0.999, 1e-8};
  const double grads[] = {1.0, -2.0, 0.5};
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    adam_update(p, Eigen::MatrixXd::Constant(1, 1, g), mom, t, s);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p(0, 0), x, 1e-15);
  }
}

TEST(Calibration, ReportsNormsWithoutApplyingThem) {
  const auto set = line_set(2, 6);
  const auto c = small_config();
  const auto cal = calibrate_gradients(set, c);
  EXPECT_GT(cal.koopman_norm, 0.0);
  EXPECT_GT(cal.divergence_norm, 0.0);
  EXPECT_GT(cal.goal_norm, 0.0);
  EXPECT_NEAR(cal.suggested_beta_g_multiplier, cal.koopman_norm / cal.goal_norm, 1e-12);
}
