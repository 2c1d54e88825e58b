#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "koopmotion/trajectory_data.hpp"

namespace koopmotion::synthetic {

// Handwriting-style corpora in millimetre units that end at the origin and
// decelerate into the goal.

/// Ease-out time warp: unit speed at the start, zero speed at the goal.
inline double ease_out(double tau) { return 1.0 - (1.0 - tau) * (1.0 - tau); }

/// Time warp whose remaining distance decays like exp(-rate * tau),
/// pinned to reach the goal exactly at tau = 1.
inline double exponential_approach(double tau, double rate) {
  const double tail = std::exp(-rate);
  return 1.0 - (std::exp(-rate * tau) - tail) / (1.0 - tail);
}

/// `n_demos` S-shaped demos of `steps` samples each. Starts are spread
/// around (-45, 0) and the offsets fade out quadratically towards the goal.
/// The path decays exponentially into the goal (`approach_rate`, 0 for an
/// ease-out instead) and rests there for the last `hold_fraction` of samples.
inline DemonstrationSet s_curve(int n_demos = 7, int steps = 1000, double dt = 0.01,
                                std::uint64_t seed = 7, double approach_rate = 4.0,
                                double hold_fraction = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-6.0, 6.0);
  std::vector<Demonstration> demos;
  for (int i = 0; i < n_demos; ++i) {
    const double ox = jitter(rng);
    const double oy = jitter(rng);
    Demonstration demo;
    demo.id = "s" + std::to_string(i);
    demo.dt = dt;
    for (int k = 0; k < steps; ++k) {
      const double tau =
          std::min(1.0, static_cast<double>(k) / ((steps - 1) * (1.0 - hold_fraction)));
      const double s = approach_rate > 0.0 ? exponential_approach(tau, approach_rate) : ease_out(tau);
      const double fade = (1.0 - s) * (1.0 - s);
      State p(2);
      p << -45.0 * (1.0 - s) + ox * fade, 18.0 * std::sin(2.0 * std::numbers::pi * s) + oy * fade;
      demo.points.push_back(std::move(p));
    }
    demo.points.back().setZero();
    demos.push_back(std::move(demo));
  }
  return DemonstrationSet::make(std::move(demos));
}

/// One straight demo from `start` to the origin with `steps` samples.
inline DemonstrationSet straight_line(int steps = 25, double dt = 0.4,
                                      State start = State{{-40.0, -10.0}}) {
  Demonstration demo;
  demo.id = "line";
  demo.dt = dt;
  for (int k = 0; k < steps; ++k) {
    const double s = ease_out(static_cast<double>(k) / (steps - 1));
    demo.points.push_back((1.0 - s) * start);
  }
  demo.points.back().setZero();
  return DemonstrationSet::make({std::move(demo)});
}

/// Two groups of demos starting on opposite sides and meeting at the origin
/// (a rendezvous pattern). `per_group` demos per side; the right group is the
/// left group reflected through the goal.
inline DemonstrationSet two_start(int per_group = 3, int steps = 1000, double dt = 0.01,
                                  std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  std::vector<Demonstration> demos;
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;
    for (int i = 0; i < per_group; ++i) {
      const double ox = jitter(rng);
      const double oy = jitter(rng);
      Demonstration demo;
      demo.id = (side == 0 ? "left" : "right") + std::to_string(i);
      demo.dt = dt;
      for (int k = 0; k < steps; ++k) {
        const double s = ease_out(static_cast<double>(k) / (steps - 1));
        const double fade = (1.0 - s) * (1.0 - s);
        const double angle = 0.5 * std::numbers::pi * s;
        State p(2);
        // Quarter arc from (-40, 20) curving into the origin along +x.
        p << -40.0 * std::cos(angle) + ox * fade, 20.0 * (1.0 - std::sin(angle)) + oy * fade;
        demo.points.push_back(sign * p);
      }
      demo.points.back().setZero();
      demos.push_back(std::move(demo));
    }
  }
  return DemonstrationSet::make(std::move(demos));
}

}  // namespace koopmotion::synthetic
