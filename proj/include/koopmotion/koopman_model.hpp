#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <random>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/lifting.hpp"

namespace koopmotion {

/// Fourier-feature lifting plus a rank-r Koopman operator K = A B^T acting
/// on the lifted space. When `normalization` is set, the lifting and the
/// operator live in normalized coordinates and the state-space entry points
/// map in and out transparently.
struct KoopmanModel {
  LiftingParams lifting;
  Eigen::MatrixXd A;  // (nu+d) x r
  Eigen::MatrixXd B;  // (nu+d) x r
  double model_dt = 1.0;
  BoundingBox domain_box;
  std::optional<AffineNormalization> normalization;
  // Training metadata, so rollouts can be set up from a checkpoint alone.
  std::optional<State> goal;
  std::size_t longest_demo = 0;

  Eigen::Index dim() const { return lifting.dim(); }
  Eigen::Index features() const { return lifting.features(); }
  Eigen::Index lifted_dim() const { return lifting.lifted_dim(); }
  Eigen::Index rank() const { return A.cols(); }

  void validate() const {
    lifting.validate();
    const auto n = lifted_dim();
    if (A.rows() != n || B.rows() != n || A.cols() != B.cols()) {
      throw DimensionError("operator factors must both be " + std::to_string(n) + " x r");
    }
    if (rank() < 1 || rank() > n) {
      throw DimensionError("rank must be in [1, " + std::to_string(n) + "]");
    }
    if (!(model_dt > 0.0)) throw InputError("model_dt must be positive");
    if (goal && goal->size() != dim()) throw DimensionError("goal dimension differs from model");
  }

  /// Dense K = A B^T; for diagnostics and small oracles only.
  Eigen::MatrixXd dense_operator() const { return A * B.transpose(); }

  State to_model(const State& x) const {
    return normalization ? normalization->forward(x) : x;
  }
  State from_model(const State& u) const {
    return normalization ? normalization->inverse(u) : u;
  }
};

enum class OperatorInit {
  /// Entries ~ N(0, 1 / (r (nu+d))).
  ScaledRandom,
  /// A = B = top-r left singular vectors of the lifted training states plus
  /// small noise, so K starts as a projection that is the identity on the
  /// dominant lifted subspace.
  IdentityFit,
};

/// Random model with the given shapes; the lifting frequencies use
/// `frequency_scale`, the operator `OperatorInit::ScaledRandom`.
template <class Rng>
KoopmanModel random_model(Eigen::Index d, Eigen::Index nu, Eigen::Index rank,
                          double frequency_scale, Rng& rng) {
  KoopmanModel m;
  m.lifting = LiftingParams::random(d, nu, frequency_scale, rng);
  const Eigen::Index n = nu + d;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(rank * n));
  std::normal_distribution<double> normal(0.0, sigma);
  m.A.resize(n, rank);
  m.B.resize(n, rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) m.A(i, k) = normal(rng);
  }
  for (Eigen::Index k = 0; k < rank; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) m.B(i, k) = normal(rng);
  }
  return m;
}

/// A (B^T z) without forming K.
inline Eigen::VectorXd predict_lifted(const KoopmanModel& model, const Eigen::VectorXd& z) {
  require_dim(z, model.lifted_dim(), "predict_lifted");
  return model.A * (model.B.transpose() * z);
}

/// One operator step projected back to the state, in model coordinates.
inline State predict_model_state(const KoopmanModel& model, const State& u) {
  const Eigen::VectorXd z = lift(model.lifting, u);
  return model.A.topRows(model.dim()) * (model.B.transpose() * z);
}

inline State predict_state(const KoopmanModel& model, const State& x) {
  require_dim(x, model.dim(), "predict_state");
  return model.from_model(predict_model_state(model, model.to_model(x)));
}

/// Quantities of div F that do not depend on the evaluation point.
///
/// With G = B A_top^T ((nu+d) x d) and h_j = w_j . G_{d+j,:},
///   div F(x) = tr(G_top) - sum_j sin(s_j(x)) h_j - d.
struct DivergenceTerms {
  double trace_top = 0.0;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  explicit DivergenceTerms(const KoopmanModel& model) {
    const Eigen::Index d = model.dim();
    G = model.B * model.A.topRows(d).transpose();
    trace_top = G.topRows(d).trace();
    h = (model.lifting.W.array() * G.bottomRows(model.features()).array()).rowwise().sum();
  }

  /// Divergence of the unscaled field at model-space point u.
  double at(const KoopmanModel& model, const State& u) const {
    const Eigen::VectorXd sin_s = feature_phases(model.lifting, u).array().sin().matrix();
    return trace_top - sin_s.dot(h) - static_cast<double>(model.dim());
  }
};

/// Per-model-step displacement field derived from a model, with a positive
/// multiplier. Physical velocity is `vector_field(x) / model_dt()`.
class FlowField {
 public:
  FlowField() = default;
  explicit FlowField(KoopmanModel model, double scale = 1.0)
      : FlowField(std::make_shared<const KoopmanModel>(std::move(model)), scale) {}
  FlowField(std::shared_ptr<const KoopmanModel> model, double scale)
      : model_(std::move(model)), scale_(scale) {
    if (!model_) throw InputError("flow field needs a model");
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
      throw InputError("flow field scale must be positive");
    }
    model_->validate();
  }

  const KoopmanModel& model() const { return *model_; }
  const std::shared_ptr<const KoopmanModel>& model_ptr() const { return model_; }
  double scale() const { return scale_; }
  double model_dt() const { return model_->model_dt; }
  Eigen::Index dim() const { return model_->dim(); }

  FlowField with_scale(double scale) const { return FlowField(model_, scale); }

 private:
  std::shared_ptr<const KoopmanModel> model_;
  double scale_ = 1.0;
};

inline State vector_field(const FlowField& field, const State& x) {
  return field.scale() * (predict_state(field.model(), x) - x);
}

/// Analytic divergence in O((nu+d) r d). Per-axis affine normalization
/// leaves the divergence unchanged, so it is evaluated in model space.
inline double divergence(const FlowField& field, const State& x) {
  const KoopmanModel& m = field.model();
  require_dim(x, m.dim(), "divergence");
  return field.scale() * DivergenceTerms(m).at(m, m.to_model(x));
}

/// Rescales so the largest speed |F(x)| / model_dt over `probe` is `max_speed`.
inline FlowField scale_to_speed(const FlowField& field, double max_speed, const Trajectory& probe) {
  if (!(max_speed > 0.0)) throw InputError("max_speed must be positive");
  if (probe.empty()) throw InputError("probe grid is empty");
  double current = 0.0;
  for (const auto& x : probe) {
    current = std::max(current, vector_field(field, x).norm() / field.model_dt());
  }
  if (!(current > 0.0) || !std::isfinite(current)) {
    throw DegenerateFieldError("field vanishes (or is non-finite) on the probe grid");
  }
  return field.with_scale(field.scale() * (max_speed / current));
}

}  // namespace koopmotion
