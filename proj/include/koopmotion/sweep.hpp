#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/metrics.hpp"
#include "koopmotion/rollout.hpp"
#include "koopmotion/trainer.hpp"

namespace koopmotion {

/// Pair-wise weight design: each family fixes one weight at its base value
/// and crosses the other two over `values`. Duplicates are kept so each
/// family stays a complete square.
inline std::vector<LossWeights> pairwise_weight_grid(const std::vector<double>& values,
                                                     const LossWeights& base = {}) {
  std::vector<LossWeights> out;
  for (int fixed = 0; fixed < 3; ++fixed) {
    for (double a : values) {
      for (double b : values) {
        LossWeights w = base;
        switch (fixed) {
          case 0: w.beta_d = a; w.beta_g = b; break;
          case 1: w.beta_k = a; w.beta_g = b; break;
          default: w.beta_k = a; w.beta_d = b; break;
        }
        out.push_back(w);
      }
    }
  }
  return out;
}

struct SweepGrid {
  std::vector<int> nus;
  std::vector<LossWeights> weights;
  std::size_t convergence_trials = 100;
  std::uint64_t convergence_seed = 0;
};

struct SweepRow {
  int nu = 0;
  LossWeights weights;
  std::uint64_t seed = 0;
  double mean_dtwd = std::numeric_limits<double>::quiet_NaN();
  double std_dtwd = std::numeric_limits<double>::quiet_NaN();
  double mean_sea = std::numeric_limits<double>::quiet_NaN();
  double std_sea = std::numeric_limits<double>::quiet_NaN();
  /// Trials that reached the goal or left the box (not stuck at max_steps).
  double converged_fraction = std::numeric_limits<double>::quiet_NaN();
  double reached_fraction = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  std::string error;
};

using SweepProgress = std::function<void(std::size_t row, std::size_t total, const SweepRow&)>;

/// Trains one model per (nu, weights) point on subsample(full_set, stride)
/// and scores it with the metrics module and a convergence study. A failed
/// row is recorded and the sweep moves on. An empty axis gives an empty table.
inline std::vector<SweepRow> ablation_sweep(const DemonstrationSet& full_set, int stride,
                                            const TrainingConfig& base, const SweepGrid& grid,
                                            const SweepProgress& progress = {}) {
  std::vector<SweepRow> rows;
  if (grid.nus.empty() || grid.weights.empty()) return rows;

  const DemonstrationSet set = subsample(full_set, stride);
  const RolloutLimits limits = RolloutDefaults::for_set(set);
  const std::size_t total = grid.nus.size() * grid.weights.size();
  for (int nu : grid.nus) {
    for (const auto& w : grid.weights) {
      SweepRow row;
      row.nu = nu;
      row.weights = w;
      row.seed = base.seed;
      try {
        TrainingConfig config = base;
        config.nu = nu;
        config.weights = w;
        const TrainingResult trained = train(set, config);
        const FlowField field(trained.model);
        const MetricsReport m = evaluate(field, full_set, stride, limits);
        row.mean_dtwd = m.mean_dtwd;
        row.std_dtwd = m.std_dtwd;
        row.mean_sea = m.mean_sea;
        row.std_sea = m.std_sea;
        ConvergenceOptions opt;
        opt.n = grid.convergence_trials;
        opt.box = limits.bounds;
        opt.exclusion = set.initial_points();
        opt.eps_exclude = limits.eps_goal;
        opt.seed = grid.convergence_seed;
        opt.limits = limits;
        const ConvergenceReport c = convergence_study(field, opt);
        const double n = static_cast<double>(c.n_trials);
        row.converged_fraction = static_cast<double>(c.n_reached_goal + c.n_hit_boundary) / n;
        row.reached_fraction = static_cast<double>(c.n_reached_goal) / n;
        if (m.evaluated < full_set.demos().size()) row.status = "partial";
      } catch (const Error& e) {
        row.status = e.kind();
        row.error = e.what();
      } catch (const std::exception& e) {
        row.status = "error";
        row.error = e.what();
      }
      rows.push_back(row);
      if (progress) progress(rows.size(), total, rows.back());
    }
  }
  return rows;
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "nu,beta_k,beta_d,beta_g,seed,mean_dtwd,std_dtwd,mean_sea,std_sea,converged_fraction,"
         "reached_fraction,status,error\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.nu << ',' << r.weights.beta_k << ',' << r.weights.beta_d << ',' << r.weights.beta_g << ','
        << r.seed << ',' << r.mean_dtwd << ',' << r.std_dtwd << ',' << r.mean_sea << ',' << r.std_sea
        << ',' << r.converged_fraction << ',' << r.reached_fraction << ',' << r.status << ','
        << detail::csv_quote(r.error) << '\n';
  }
}

}  // namespace koopmotion
