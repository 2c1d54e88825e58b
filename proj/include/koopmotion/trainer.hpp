#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "koopmotion/adam.hpp"
#include "koopmotion/errors.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/losses.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace koopmotion {

struct TrainingConfig {
  int nu = 1024;
  int rank = 32;
  LossWeights weights;
  double learning_rate = 8e-4;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool normalize = false;
  /// Std-dev of the initial Fourier frequencies; unset means 1.0 with
  /// normalization and 0.05 on raw (millimetre-scale) coordinates.
  std::optional<double> frequency_scale;
  OperatorInit operator_init = OperatorInit::ScaledRandom;
  /// Evaluate the divergence loss on every training state instead of the
  /// batch's own x_k.
  bool full_set_divergence = false;
  /// Global gradient-norm clip; off when unset.
  std::optional<double> clip_norm;

  double effective_frequency_scale() const {
    return frequency_scale.value_or(normalize ? 1.0 : 0.05);
  }

  AdamSettings adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }

  void validate() const {
    if (nu < 0) throw InputError("nu must be >= 0");
    if (rank < 1) throw InputError("rank must be >= 1");
    if (epochs < 0) throw InputError("epochs must be >= 0");
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
    if (clip_norm && !(*clip_norm > 0.0)) throw InputError("clip_norm must be > 0");
    weights.validate();
  }
};

inline std::string to_string(OperatorInit init) {
  return init == OperatorInit::IdentityFit ? "identity_fit" : "scaled_random";
}

inline OperatorInit operator_init_from_string(const std::string& s) {
  if (s == "scaled_random") return OperatorInit::ScaledRandom;
  if (s == "identity_fit") return OperatorInit::IdentityFit;
  throw InputError("unknown operator_init '" + s + "'");
}

inline void to_json(nlohmann::json& j, const TrainingConfig& c) {
  j = {{"nu", c.nu},
       {"rank", c.rank},
       {"beta_k", c.weights.beta_k},
       {"beta_d", c.weights.beta_d},
       {"beta_g", c.weights.beta_g},
       {"learning_rate", c.learning_rate},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"normalize", c.normalize},
       {"frequency_scale", c.effective_frequency_scale()},
       {"operator_init", to_string(c.operator_init)},
       {"full_set_divergence", c.full_set_divergence}};
  j["clip_norm"] = c.clip_norm ? nlohmann::json(*c.clip_norm) : nlohmann::json(nullptr);
}

/// Reads the keys present in `j` over the defaults in `c`; unknown keys are
/// rejected so typos do not silently fall back to defaults.
inline void from_json(const nlohmann::json& j, TrainingConfig& c) {
  if (!j.is_object()) throw InputError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "nu") c.nu = value.get<int>();
    else if (key == "rank") c.rank = value.get<int>();
    else if (key == "beta_k") c.weights.beta_k = value.get<double>();
    else if (key == "beta_d") c.weights.beta_d = value.get<double>();
    else if (key == "beta_g") c.weights.beta_g = value.get<double>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
    else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
    else if (key == "adam_eps") c.adam_eps = value.get<double>();
    else if (key == "normalize") c.normalize = value.get<bool>();
    else if (key == "frequency_scale") {
      if (value.is_null()) c.frequency_scale.reset();
      else c.frequency_scale = value.get<double>();
    } else if (key == "operator_init") c.operator_init = operator_init_from_string(value.get<std::string>());
    else if (key == "full_set_divergence") c.full_set_divergence = value.get<bool>();
    else if (key == "clip_norm") {
      if (value.is_null()) c.clip_norm.reset();
      else c.clip_norm = value.get<double>();
    } else {
      throw InputError("unknown training config key '" + key + "'");
    }
  }
}

struct TrainingReport {
  std::vector<LossBreakdown> history;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::size_t batches_per_epoch = 0;
  std::string final_model_path;
};

struct TrainingResult {
  KoopmanModel model;
  TrainingReport report;
};

/// ceil(pairs / batch) batches per epoch; the last partial batch is kept.
inline std::size_t batches_per_epoch(std::size_t pairs, std::size_t batch_size) {
  if (pairs == 0) return 0;
  const std::size_t b = std::min(batch_size, pairs);
  return (pairs + b - 1) / b;
}

/// Model-space training data: the (optionally normalized) set and its pairs.
struct PreparedData {
  DemonstrationSet set;
  std::optional<AffineNormalization> normalization;
  std::vector<TrainingPair> pairs;
};

inline PreparedData prepare_training_data(const DemonstrationSet& set, const TrainingConfig& config) {
  if (set.empty()) throw InsufficientDataError("training set has no demonstrations");
  PreparedData data;
  if (config.normalize) {
    data.normalization = AffineNormalization::fit(set.domain_box());
    data.set = transformed(set, *data.normalization);
  } else {
    data.set = set;
  }
  data.pairs = training_pairs(data.set);
  if (data.pairs.empty()) throw InsufficientDataError("training set yields no pairs");
  return data;
}

/// Seeded initial model. Draw order: lifting, then the operator factors.
template <class Rng>
KoopmanModel initial_model(const PreparedData& data, const DemonstrationSet& original,
                           const TrainingConfig& config, Rng& rng) {
  const Eigen::Index d = data.set.dim();
  const Eigen::Index n = config.nu + d;
  if (config.rank > n) {
    throw InputError("rank " + std::to_string(config.rank) + " exceeds lifted dimension " +
                     std::to_string(n));
  }
  KoopmanModel m = random_model(d, config.nu, config.rank, config.effective_frequency_scale(), rng);
  m.model_dt = data.set.dt();
  m.domain_box = original.domain_box();
  m.normalization = data.normalization;
  m.goal = original.goal();
  m.longest_demo = original.longest_demo();

  if (config.operator_init == OperatorInit::IdentityFit) {
    Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(data.pairs.size()));
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
      Z.col(static_cast<Eigen::Index>(i)) = lift(m.lifting, data.pairs[i].x_k);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU);
    const Eigen::Index k = std::min<Eigen::Index>(config.rank, svd.matrixU().cols());
    // Keep the random draw as small noise on top of the projector factors.
    const double noise = 1e-2;
    m.A *= noise;
    m.B *= noise;
    m.A.leftCols(k) += svd.matrixU().leftCols(k);
    m.B.leftCols(k) += svd.matrixU().leftCols(k);
  }
  return m;
}

using IterationCallback =
    std::function<void(std::size_t iteration, const KoopmanModel& model, const LossBreakdown& loss)>;

/// Adam over (W, b, A, B) for epochs x ceil(pairs / batch) iterations.
/// Pairs are reshuffled every epoch from the seeded generator. `on_iteration`
/// sees the model after each update.
inline TrainingResult train(const DemonstrationSet& set, const TrainingConfig& config,
                            const IterationCallback& on_iteration = {}) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = prepare_training_data(set, config);
  std::mt19937_64 rng(config.seed);
  TrainingResult result{initial_model(data, set, config, rng), {}};
  KoopmanModel& model = result.model;
  auto& report = result.report;
  report.seed = config.seed;
  report.pairs = data.pairs.size();

  const std::size_t batch =
      std::min(static_cast<std::size_t>(config.batch_size), data.pairs.size());
  report.batches_per_epoch = batches_per_epoch(data.pairs.size(), batch);

  std::vector<State> all_states;
  if (config.full_set_divergence) {
    for (const auto& p : data.pairs) all_states.push_back(p.x_k);
  }

  AdamState adam = AdamState::for_model(model);
  const AdamSettings settings = config.adam();
  std::vector<std::size_t> order(data.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingPair> batch_pairs;
  std::vector<State> batch_states;
  std::size_t iteration = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size(); first += batch) {
      const std::size_t last = std::min(first + batch, order.size());
      batch_pairs.clear();
      batch_states.clear();
      for (std::size_t i = first; i < last; ++i) {
        batch_pairs.push_back(data.pairs[order[i]]);
        batch_states.push_back(data.pairs[order[i]].x_k);
      }
      const auto& div_points = config.full_set_divergence ? all_states : batch_states;
      auto [loss, grad] = gradients(model, batch_pairs, div_points, data.set.goal(), config.weights);
      if (!std::isfinite(loss.total) || !grad.all_finite()) {
        throw DivergedTrainingError(iteration, "non-finite loss or gradient");
      }
      if (config.clip_norm) {
        const double norm = std::sqrt(grad.squared_norm());
        if (norm > *config.clip_norm) {
          const double f = *config.clip_norm / norm;
          grad.dW *= f;
          grad.db *= f;
          grad.dA *= f;
          grad.dB *= f;
        }
      }
      adam_step(model, grad, adam, settings);
      report.history.push_back(loss);
      if (on_iteration) on_iteration(iteration, model, loss);
      ++iteration;
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Per-term gradient norms at the initial model; the suggested multipliers
/// would equalize each term's contribution with the Koopman term. Nothing is
/// applied automatically.
struct GradientCalibration {
  double koopman_norm = 0.0;
  double divergence_norm = 0.0;
  double goal_norm = 0.0;
  double suggested_beta_d_multiplier = 1.0;
  double suggested_beta_g_multiplier = 1.0;
};

inline GradientCalibration calibrate_gradients(const DemonstrationSet& set,
                                               const TrainingConfig& config) {
  config.validate();
  const PreparedData data = prepare_training_data(set, config);
  std::mt19937_64 rng(config.seed);
  const KoopmanModel model = initial_model(data, set, config, rng);
  std::vector<State> states;
  for (const auto& p : data.pairs) states.push_back(p.x_k);

  auto norm_of = [&](auto&& add) {
    ParameterGradient g = ParameterGradient::zeros_like(model);
    add(g);
    return std::sqrt(g.squared_norm());
  };
  GradientCalibration c;
  c.koopman_norm = norm_of([&](auto& g) { add_koopman_gradient(model, data.pairs, 1.0, g); });
  c.divergence_norm = norm_of([&](auto& g) { add_divergence_gradient(model, states, 1.0, g); });
  c.goal_norm = norm_of([&](auto& g) { add_goal_gradient(model, data.set.goal(), 1.0, g); });
  if (c.divergence_norm > 0.0) c.suggested_beta_d_multiplier = c.koopman_norm / c.divergence_norm;
  if (c.goal_norm > 0.0) c.suggested_beta_g_multiplier = c.koopman_norm / c.goal_norm;
  return c;
}

}  // namespace koopmotion
