#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/rollout.hpp"

namespace koopmotion {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

struct VehicleState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // metres
  double heading = 0.0;
  double linear_speed = 0.0;
  double angular_rate = 0.0;
};

/// Heading PID plus a first-order speed loop. Defaults are not tuned.
struct ControllerGains {
  double kp = 2.0;
  double ki = 0.0;
  double kd = 0.2;
  double speed_gain = 2.0;  // 1/s
  double max_speed = 0.5;  // m/s
  double max_angular_rate = 1.5;  // rad/s
  double period = 0.05;  // s
  bool cos_slowdown = true;

  void validate() const {
    if (kp < 0.0 || ki < 0.0 || kd < 0.0 || speed_gain < 0.0) {
      throw InputError("controller gains must be >= 0");
    }
    if (!(max_speed > 0.0) || !(max_angular_rate > 0.0) || !(period > 0.0)) {
      throw InputError("actuator limits and control period must be > 0");
    }
  }
};

struct ControllerState {
  double integral = 0.0;
  double previous_error = 0.0;
  bool has_previous = false;
};

enum class DisturbanceMode { None, Uniform, Vortex, Sinusoidal };

inline const char* to_string(DisturbanceMode m) {
  switch (m) {
    case DisturbanceMode::None: return "none";
    case DisturbanceMode::Uniform: return "uniform";
    case DisturbanceMode::Vortex: return "vortex";
    case DisturbanceMode::Sinusoidal: return "sinusoidal";
  }
  return "none";
}

inline DisturbanceMode disturbance_mode_from_string(const std::string& s) {
  if (s == "none") return DisturbanceMode::None;
  if (s == "uniform") return DisturbanceMode::Uniform;
  if (s == "vortex") return DisturbanceMode::Vortex;
  if (s == "sinusoidal") return DisturbanceMode::Sinusoidal;
  throw InputError("unknown disturbance mode '" + s + "'");
}

/// Ambient current. Uniform and sinusoidal flow along `direction`; the
/// vortex circulates counter-clockwise around `center` with a solid core.
struct Disturbance {
  DisturbanceMode mode = DisturbanceMode::None;
  double magnitude = 0.0;  // m/s
  double direction = 0.0;  // radians
  Eigen::Vector2d center = Eigen::Vector2d(2.25, 1.5);
  double core_radius = 0.5;  // m
  double period = 10.0;  // s

  void validate() const {
    if (magnitude < 0.0) throw InputError("disturbance magnitude must be >= 0");
    if (mode == DisturbanceMode::Vortex && !(core_radius > 0.0)) {
      throw InputError("vortex core radius must be > 0");
    }
    if (mode == DisturbanceMode::Sinusoidal && !(period > 0.0)) {
      throw InputError("disturbance period must be > 0");
    }
  }

  Eigen::Vector2d velocity(const Eigen::Vector2d& p, double t) const {
    const Eigen::Vector2d dir(std::cos(direction), std::sin(direction));
    switch (mode) {
      case DisturbanceMode::None: return Eigen::Vector2d::Zero();
      case DisturbanceMode::Uniform: return magnitude * dir;
      case DisturbanceMode::Sinusoidal:
        return magnitude * std::sin(2.0 * std::numbers::pi * t / period) * dir;
      case DisturbanceMode::Vortex: {
        const Eigen::Vector2d r = p - center;
        const double n = r.norm();
        if (n == 0.0) return Eigen::Vector2d::Zero();
        return magnitude * std::min(1.0, n / core_radius) * Eigen::Vector2d(-r.y(), r.x()) / n;
      }
    }
    return Eigen::Vector2d::Zero();
  }
};

/// Uniform-scale affine map between the tank (world, metres) and the field's
/// domain box. `scale` is field units per metre, chosen so the whole box fits
/// inside the tank with both centres aligned.
struct WorkspaceMap {
  BoundingBox world;
  BoundingBox field;
  double scale = 1.0;

  static WorkspaceMap fit(const BoundingBox& field_box, double width = 4.5, double height = 3.0) {
    if (field_box.dim() != 2) throw DimensionError("workspace map needs a 2-D field");
    if (!(width > 0.0) || !(height > 0.0)) throw InputError("workspace size must be > 0");
    WorkspaceMap m;
    m.world.lo = State::Zero(2);
    m.world.hi = State{{width, height}};
    m.field = field_box;
    const State ext = field_box.hi - field_box.lo;
    m.scale = std::max(ext[0] / width, ext[1] / height);
    if (!(m.scale > 0.0)) m.scale = 1.0;
    return m;
  }

  State to_field(const Eigen::Vector2d& w) const {
    return field.center() + scale * (State(w) - world.center());
  }
  Eigen::Vector2d to_world(const State& f) const {
    return world.center() + (f - field.center()) / scale;
  }
};

struct VehicleCommand {
  double heading = 0.0;
  double speed = 0.0;
};

/// Desired heading and speed from the field at `position` (field units per
/// second). A zero field returns nullopt; callers hold heading at speed 0.
inline std::optional<VehicleCommand> desired_command(const FlowField& field, const State& position) {
  if (field.dim() != 2) throw DimensionError("desired_command needs a 2-D field");
  const State v = vector_field(field, position) / field.model_dt();
  const double speed = v.norm();
  if (!(speed > 0.0)) return std::nullopt;
  return VehicleCommand{std::atan2(v[1], v[0]), speed};
}

/// One control period of unicycle kinematics under a PID heading loop.
inline VehicleState step_vehicle(const VehicleState& state, const VehicleCommand& command,
                                 const ControllerGains& gains, ControllerState& ctrl,
                                 const Disturbance& disturbance, double t, double dt) {
  if (!(dt > 0.0)) throw InputError("step_vehicle: dt must be > 0");
  const double e = wrap_angle(command.heading - state.heading);
  ctrl.integral += e * dt;
  const double deriv = ctrl.has_previous ? wrap_angle(e - ctrl.previous_error) / dt : 0.0;
  ctrl.previous_error = e;
  ctrl.has_previous = true;

  VehicleState next = state;
  next.angular_rate = std::clamp(gains.kp * e + gains.ki * ctrl.integral + gains.kd * deriv,
                                 -gains.max_angular_rate, gains.max_angular_rate);
  const double target =
      std::min(command.speed, gains.max_speed) * (gains.cos_slowdown ? std::max(0.0, std::cos(e)) : 1.0);
  const double blend = std::min(1.0, gains.speed_gain * dt);
  next.linear_speed = std::clamp(state.linear_speed + blend * (target - state.linear_speed), 0.0,
                                 gains.max_speed);
  const Eigen::Vector2d heading_dir(std::cos(state.heading), std::sin(state.heading));
  next.position = state.position + dt * (next.linear_speed * heading_dir +
                                         disturbance.velocity(state.position, t));
  next.heading = wrap_angle(state.heading + dt * next.angular_rate);
  if (!next.position.allFinite() || !std::isfinite(next.heading) || !std::isfinite(next.linear_speed)) {
    throw NumericBlowupError(0, "vehicle state became non-finite");
  }
  return next;
}

struct SimulationConfig {
  ControllerGains gains;
  Disturbance disturbance;
  double duration = 120.0;  // s
  double tank_width = 4.5;
  double tank_height = 3.0;
  /// Largest commanded speed as a fraction of gains.max_speed.
  double speed_fraction = 1.0;
  /// Initial heading; defaults to the desired heading at the start.
  std::optional<double> initial_heading;

  void validate() const {
    gains.validate();
    disturbance.validate();
    if (!(duration > 0.0)) throw InputError("duration must be > 0");
    if (!(speed_fraction > 0.0) || speed_fraction > 1.0) {
      throw InputError("speed_fraction must be in (0, 1]");
    }
  }
};

struct SimSample {
  double t = 0.0;
  VehicleState state;
};

struct CrossTrack {
  double mean = 0.0;
  double max = 0.0;
  double p95 = 0.0;
};

struct SimulationResult {
  std::vector<SimSample> samples;
  bool success = false;
  std::optional<double> time_to_goal;
  CrossTrack cross_track;  // metres
  Eigen::Vector2d final_world = Eigen::Vector2d::Zero();
  State final_field;
  Trajectory reference_world;
};

namespace detail {

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double w = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + w * ab)).norm();
}

inline double polyline_distance(const Eigen::Vector2d& p, const Trajectory& line) {
  if (line.size() == 1) return (p - Eigen::Vector2d(line.front())).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  }
  return best;
}

}  // namespace detail

/// Field rescaled so the fastest probed command equals speed_fraction *
/// max_speed in world metres per second.
inline FlowField vehicle_field(const FlowField& field, const WorkspaceMap& map,
                               const SimulationConfig& config, const Trajectory& probe) {
  return scale_to_speed(field, config.speed_fraction * config.gains.max_speed * map.scale, probe);
}

/// Closed-loop run from `start_world` until the vehicle is within eps_goal
/// (field units) of `goal` or `duration` elapses. Cross-track error is
/// measured against the streamline of the field from the same start, over
/// the samples outside the goal ball.
inline SimulationResult simulate_run(const FlowField& field, const WorkspaceMap& map,
                                     const SimulationConfig& config, const Eigen::Vector2d& start_world,
                                     const RolloutLimits& limits) {
  config.validate();
  if (field.dim() != 2) throw DimensionError("simulate_run needs a 2-D field");
  SimulationResult result;

  const State start_field = map.to_field(start_world);
  // Streamlines do not depend on the speed scale; trace the unscaled field.
  const Rollout ref = substep_rollout(FlowField(field.model_ptr(), 1.0), start_field, 10, limits);
  for (const auto& p : ref.states) result.reference_world.push_back(State(map.to_world(p)));
  // A converged streamline ends at the goal, not at the edge of its ball.
  if (ref.terminated == Termination::ReachedGoal) result.reference_world.push_back(State(map.to_world(limits.goal)));

  VehicleState s;
  s.position = start_world;
  const auto first = desired_command(field, start_field);
  s.heading = wrap_angle(config.initial_heading.value_or(first ? first->heading : 0.0));
  ControllerState ctrl;
  const double dt = config.gains.period;
  const auto steps = static_cast<std::size_t>(std::ceil(config.duration / dt));

  std::vector<double> errors;
  double t = 0.0;
  auto record = [&](const VehicleState& st) {
    result.samples.push_back({t, st});
    // Inside the goal ball the streamline has ended; overshoot there is along-track.
    if ((map.to_field(st.position) - limits.goal).norm() > limits.eps_goal) {
      errors.push_back(detail::polyline_distance(st.position, result.reference_world));
    }
  };
  record(s);
  for (std::size_t k = 0; k < steps; ++k) {
    const State pf = map.to_field(s.position);
    if ((pf - limits.goal).norm() <= limits.eps_goal) {
      result.success = true;
      result.time_to_goal = t;
      break;
    }
    const auto cmd = desired_command(field, pf);
    VehicleCommand world_cmd = cmd ? VehicleCommand{cmd->heading, cmd->speed / map.scale}
                                   : VehicleCommand{s.heading, 0.0};
    s = step_vehicle(s, world_cmd, config.gains, ctrl, config.disturbance, t, dt);
    t += dt;
    record(s);
  }
  if (!result.success && (map.to_field(s.position) - limits.goal).norm() <= limits.eps_goal) {
    result.success = true;
    result.time_to_goal = t;
  }
  result.final_world = s.position;
  result.final_field = map.to_field(s.position);

  if (errors.empty()) return result;
  double sum = 0.0;
  for (double e : errors) sum += e;
  result.cross_track.mean = sum / static_cast<double>(errors.size());
  result.cross_track.max = *std::max_element(errors.begin(), errors.end());
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1;
  result.cross_track.p95 = sorted[std::min(idx, sorted.size() - 1)];
  return result;
}

inline void to_json(nlohmann::json& j, const SimulationConfig& c) {
  j = {{"kp", c.gains.kp},
       {"ki", c.gains.ki},
       {"kd", c.gains.kd},
       {"speed_gain", c.gains.speed_gain},
       {"max_speed", c.gains.max_speed},
       {"max_angular_rate", c.gains.max_angular_rate},
       {"period", c.gains.period},
       {"cos_slowdown", c.gains.cos_slowdown},
       {"disturbance",
        {{"mode", to_string(c.disturbance.mode)},
         {"magnitude", c.disturbance.magnitude},
         {"direction", c.disturbance.direction},
         {"center", {c.disturbance.center.x(), c.disturbance.center.y()}},
         {"core_radius", c.disturbance.core_radius},
         {"period", c.disturbance.period}}},
       {"duration", c.duration},
       {"tank_width", c.tank_width},
       {"tank_height", c.tank_height},
       {"speed_fraction", c.speed_fraction},
       {"initial_heading", c.initial_heading ? nlohmann::json(*c.initial_heading) : nlohmann::json()}};
}

inline void from_json(const nlohmann::json& j, SimulationConfig& c) {
  if (!j.is_object()) throw InputError("simulation config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "kp") c.gains.kp = v.get<double>();
    else if (key == "ki") c.gains.ki = v.get<double>();
    else if (key == "kd") c.gains.kd = v.get<double>();
    else if (key == "speed_gain") c.gains.speed_gain = v.get<double>();
    else if (key == "max_speed") c.gains.max_speed = v.get<double>();
    else if (key == "max_angular_rate") c.gains.max_angular_rate = v.get<double>();
    else if (key == "period") c.gains.period = v.get<double>();
    else if (key == "cos_slowdown") c.gains.cos_slowdown = v.get<bool>();
    else if (key == "duration") c.duration = v.get<double>();
    else if (key == "tank_width") c.tank_width = v.get<double>();
    else if (key == "tank_height") c.tank_height = v.get<double>();
    else if (key == "speed_fraction") c.speed_fraction = v.get<double>();
    else if (key == "initial_heading") {
      if (v.is_null()) c.initial_heading.reset();
      else c.initial_heading = v.get<double>();
    } else if (key == "disturbance") {
      for (const auto& [dk, dv] : v.items()) {
        if (dk == "mode") c.disturbance.mode = disturbance_mode_from_string(dv.get<std::string>());
        else if (dk == "magnitude") c.disturbance.magnitude = dv.get<double>();
        else if (dk == "direction") c.disturbance.direction = dv.get<double>();
        else if (dk == "center") c.disturbance.center = {dv.at(0).get<double>(), dv.at(1).get<double>()};
        else if (dk == "core_radius") c.disturbance.core_radius = dv.get<double>();
        else if (dk == "period") c.disturbance.period = dv.get<double>();
        else throw InputError("unknown disturbance key '" + dk + "'");
      }
    } else {
      throw InputError("unknown simulation config key '" + key + "'");
    }
  }
  c.validate();
}

}  // namespace koopmotion
