#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/trajectory_data.hpp"

namespace koopmotion {

enum class Termination { ReachedGoal, HitBoundary, MaxSteps };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedGoal: return "reached_goal";
    case Termination::HitBoundary: return "hit_boundary";
    case Termination::MaxSteps: return "max_steps";
  }
  return "unknown";
}

struct Rollout {
  Trajectory states;
  Termination terminated = Termination::MaxSteps;
  std::size_t steps_taken = 0;
};

struct RolloutLimits {
  /// Limit in model steps; a sub-stepped rollout may take
  /// max_steps * substeps Euler steps.
  std::size_t max_steps = 1000;
  State goal;
  double eps_goal = 0.0;
  BoundingBox bounds;
};

/// Defaults tied to a training corpus: eps_goal is 1% of the box diagonal,
/// max_steps 50x the longest demo, bounds the box inflated by 25% per axis.
struct RolloutDefaults {
  static constexpr double kGoalFraction = 0.01;
  static constexpr double kStepsPerDemoPoint = 50.0;
  static constexpr double kBoxInflation = 0.25;

  static RolloutLimits for_set(const DemonstrationSet& set) {
    RolloutLimits limits;
    limits.goal = set.goal();
    limits.eps_goal = kGoalFraction * set.domain_box().diagonal();
    limits.max_steps =
        static_cast<std::size_t>(kStepsPerDemoPoint * static_cast<double>(set.longest_demo()));
    limits.bounds = set.domain_box().inflated(kBoxInflation);
    return limits;
  }

  /// Same defaults reconstructed from a checkpoint's training box, for
  /// when the corpus is not at hand.
  static RolloutLimits for_model(const KoopmanModel& model, const State& goal,
                                 std::size_t longest_demo) {
    RolloutLimits limits;
    limits.goal = goal;
    limits.eps_goal = kGoalFraction * model.domain_box.diagonal();
    limits.max_steps =
        static_cast<std::size_t>(kStepsPerDemoPoint * static_cast<double>(longest_demo));
    limits.bounds = model.domain_box.inflated(kBoxInflation);
    return limits;
  }

  /// From the goal and demo length stored with a trained model.
  static RolloutLimits for_model(const KoopmanModel& model) {
    if (!model.goal || model.longest_demo == 0) {
      throw InputError("model carries no goal/demo-length metadata; supply a corpus");
    }
    return for_model(model, *model.goal, model.longest_demo);
  }
};

/// Euler integration of the displacement field with step 1/substeps of a
/// model step. substeps = 1 is plain Koopman propagation.
inline Rollout substep_rollout(const FlowField& field, const State& x0, int substeps,
                               const RolloutLimits& limits) {
  require_dim(x0, field.dim(), "rollout");
  require_dim(limits.goal, field.dim(), "rollout goal");
  if (substeps < 1) throw InputError("substeps must be >= 1");
  if (limits.max_steps < 1) throw InputError("max_steps must be >= 1");
  if (!(limits.eps_goal > 0.0)) throw InputError("eps_goal must be > 0");

  Rollout out;
  out.states.push_back(x0);
  auto classify = [&](const State& x) -> std::optional<Termination> {
    if ((x - limits.goal).norm() <= limits.eps_goal) return Termination::ReachedGoal;
    if (!limits.bounds.contains(x)) return Termination::HitBoundary;
    return std::nullopt;
  };
  if (auto t = classify(x0)) {
    out.terminated = *t;
    return out;
  }
  const double h = 1.0 / static_cast<double>(substeps);
  const std::size_t total = limits.max_steps * static_cast<std::size_t>(substeps);
  State x = x0;
  for (std::size_t step = 1; step <= total; ++step) {
    x = x + h * vector_field(field, x);
    if (!x.allFinite()) throw NumericBlowupError(step, "rollout state became non-finite");
    out.states.push_back(x);
    out.steps_taken = step;
    if (auto t = classify(x)) {
      out.terminated = *t;
      return out;
    }
  }
  out.terminated = Termination::MaxSteps;
  return out;
}

inline Rollout rollout(const FlowField& field, const State& x0, const RolloutLimits& limits) {
  return substep_rollout(field, x0, 1, limits);
}

struct ConvergenceOptions {
  std::size_t n = 500;
  BoundingBox box;  // sampling box
  Trajectory exclusion;  // training initial conditions
  double eps_exclude = 0.0;
  std::uint64_t seed = 0;
  RolloutLimits limits;
  std::size_t max_attempts_per_sample = 10000;
};

struct ConvergenceReport {
  std::size_t n_trials = 0;
  std::size_t n_reached_goal = 0;
  std::size_t n_hit_boundary = 0;
  std::size_t n_nonconverged = 0;
  Trajectory initial_points;
  Trajectory final_points;
  std::vector<Termination> outcomes;
};

/// Uniform initial conditions in `box`, rejecting any within eps_exclude of
/// a training initial condition, each rolled out under `limits`.
inline ConvergenceReport convergence_study(const FlowField& field, const ConvergenceOptions& opt) {
  if (opt.n < 1) throw InputError("convergence study needs n >= 1");
  const Eigen::Index d = field.dim();
  require_dim(opt.box.lo, d, "convergence box");
  std::mt19937_64 rng(opt.seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (Eigen::Index i = 0; i < d; ++i) axes.emplace_back(opt.box.lo[i], opt.box.hi[i]);

  ConvergenceReport report;
  report.n_trials = opt.n;
  for (std::size_t trial = 0; trial < opt.n; ++trial) {
    State x0(d);
    bool accepted = false;
    for (std::size_t attempt = 0; attempt < opt.max_attempts_per_sample && !accepted; ++attempt) {
      for (Eigen::Index i = 0; i < d; ++i) x0[i] = axes[static_cast<std::size_t>(i)](rng);
      accepted = std::none_of(opt.exclusion.begin(), opt.exclusion.end(), [&](const State& p) {
        return (p - x0).norm() < opt.eps_exclude;
      });
    }
    if (!accepted) {
      throw SamplingError("could not draw an initial condition outside the exclusion zone after " +
                          std::to_string(opt.max_attempts_per_sample) + " attempts");
    }
    const Rollout r = rollout(field, x0, opt.limits);
    report.initial_points.push_back(x0);
    report.final_points.push_back(r.states.back());
    report.outcomes.push_back(r.terminated);
    switch (r.terminated) {
      case Termination::ReachedGoal: ++report.n_reached_goal; break;
      case Termination::HitBoundary: ++report.n_hit_boundary; break;
      case Termination::MaxSteps: ++report.n_nonconverged; break;
    }
  }
  return report;
}

/// Second-stage check for trials that left the sampling box: re-run them
/// from the same initial condition inside `enlarged_bounds`.
inline ConvergenceReport recheck_boundary_trials(const FlowField& field,
                                                 const ConvergenceReport& first,
                                                 RolloutLimits limits,
                                                 const BoundingBox& enlarged_bounds) {
  limits.bounds = enlarged_bounds;
  ConvergenceReport out;
  for (std::size_t i = 0; i < first.outcomes.size(); ++i) {
    if (first.outcomes[i] != Termination::HitBoundary) continue;
    const Rollout r = rollout(field, first.initial_points[i], limits);
    ++out.n_trials;
    out.initial_points.push_back(first.initial_points[i]);
    out.final_points.push_back(r.states.back());
    out.outcomes.push_back(r.terminated);
    switch (r.terminated) {
      case Termination::ReachedGoal: ++out.n_reached_goal; break;
      case Termination::HitBoundary: ++out.n_hit_boundary; break;
      case Termination::MaxSteps: ++out.n_nonconverged; break;
    }
  }
  return out;
}

struct GridSample {
  State position;
  State displacement;
  double divergence = 0.0;
};

/// Field and divergence on a regular grid; last axis varies fastest.
inline std::vector<GridSample> field_grid(const FlowField& field, const std::vector<int>& resolution,
                                          const BoundingBox& box) {
  const KoopmanModel& m = field.model();
  const DivergenceTerms terms(m);
  std::vector<GridSample> out;
  for (auto& x : grid_points(box, resolution)) {
    GridSample s;
    s.displacement = vector_field(field, x);
    s.divergence = field.scale() * terms.at(m, m.to_model(x));
    s.position = std::move(x);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace koopmotion
