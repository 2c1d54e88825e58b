#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/metrics.hpp"
#include "koopmotion/rollout.hpp"
#include "koopmotion/spectral.hpp"
#include "koopmotion/trainer.hpp"
#include "koopmotion/vehicle_sim.hpp"

namespace koopmotion {

inline constexpr const char* kToolVersion = "0.1.0";

/// JSON has no NaN; non-finite numbers are written as null.
inline nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json();
}

inline nlohmann::json to_json_array(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

// ---- hashing and manifests --------------------------------------------------

/// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// Hash of a file, or of every regular file under a directory (sorted by
/// relative path, path bytes included).
inline std::string hash_path(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read '" + p.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
      h = fnv1a64(fs::relative(f, path).generic_string(), h);
      h = fnv1a64(read(f), h);
    }
    return "fnv1a64:" + hex64(h);
  }
  return "fnv1a64:" + hex64(fnv1a64(read(path)));
}

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json inputs = nlohmann::json::object();  // path -> hash
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json extra = nlohmann::json::object();
  double wall_seconds = 0.0;

  void add_input(const std::filesystem::path& p) { inputs[p.string()] = hash_path(p); }
  void add_output(const std::filesystem::path& p) { outputs.push_back(p.string()); }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"command", command},   {"config", config},
                        {"seed", seed},         {"inputs", inputs},
                        {"outputs", outputs},   {"tool_version", kToolVersion},
                        {"wall_seconds", wall_seconds}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }
};

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.precision(17);
  return out;
}

// ---- training ---------------------------------------------------------------

inline void write_loss_csv(std::ostream& out, const std::vector<LossBreakdown>& history) {
  out << "iter,koopman,divergence,goal,total\n";
  out.precision(17);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& l = history[i];
    out << i << ',' << l.koopman << ',' << l.flow_divergence << ',' << l.goal << ',' << l.total << '\n';
  }
}

// ---- spectra ----------------------------------------------------------------

inline nlohmann::json spectral_to_json(const SpectralReport& r, bool with_vectors = false) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& l : r.eigenvalues) {
    values.push_back({{"re", l.real()}, {"im", l.imag()}, {"modulus", std::abs(l)}});
  }
  nlohmann::json j = {{"eigenvalues", values},
                      {"zero_multiplicity", r.zero_multiplicity},
                      {"max_modulus", r.max_modulus},
                      {"stable", r.stable},
                      {"max_residual", r.max_residual},
                      {"eigenvectors_side", r.side == EigenvectorSide::Right ? "right" : "left"}};
  if (with_vectors) {
    nlohmann::json vecs = nlohmann::json::array();
    for (const auto& v : r.eigenvectors) {
      nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v[i].real());
        im.push_back(v[i].imag());
      }
      vecs.push_back({{"re", re}, {"im", im}});
    }
    j["eigenvectors"] = vecs;
  }
  return j;
}

/// Eigenvalues plus `circle_samples` points on the unit circle.
inline void write_unit_circle_csv(std::ostream& out, const SpectralReport& r, int circle_samples = 360) {
  out << "kind,re,im\n";
  out.precision(17);
  for (const auto& l : r.eigenvalues) out << "eigenvalue," << l.real() << ',' << l.imag() << '\n';
  if (r.zero_multiplicity > 0) out << "eigenvalue,0,0\n";
  for (int k = 0; k <= circle_samples; ++k) {
    const double a = 2.0 * std::numbers::pi * k / circle_samples;
    out << "circle," << std::cos(a) << ',' << std::sin(a) << '\n';
  }
}

inline void write_eigenfunction_csv(std::ostream& out, const Trajectory& grid,
                                    const std::vector<Complex>& phi) {
  const Eigen::Index d = grid.empty() ? 0 : grid.front().size();
  for (Eigen::Index i = 0; i < d; ++i) out << 'x' << (i + 1) << ',';
  out << "re,im,abs\n";
  out.precision(17);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    for (Eigen::Index i = 0; i < d; ++i) out << grid[n][i] << ',';
    out << phi[n].real() << ',' << phi[n].imag() << ',' << std::abs(phi[n]) << '\n';
  }
}

// ---- field, rollouts, convergence -------------------------------------------

inline void write_field_csv(std::ostream& out, const std::vector<GridSample>& grid) {
  const Eigen::Index d = grid.empty() ? 0 : grid.front().position.size();
  for (Eigen::Index i = 0; i < d; ++i) out << 'x' << (i + 1) << ',';
  for (Eigen::Index i = 0; i < d; ++i) out << 'f' << (i + 1) << ',';
  out << "divergence\n";
  out.precision(17);
  for (const auto& s : grid) {
    for (Eigen::Index i = 0; i < d; ++i) out << s.position[i] << ',';
    for (Eigen::Index i = 0; i < d; ++i) out << s.displacement[i] << ',';
    out << s.divergence << '\n';
  }
}

inline nlohmann::json convergence_to_json(const ConvergenceReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    trials.push_back({{"initial", to_json_array(r.initial_points[i])},
                      {"final", to_json_array(r.final_points[i])},
                      {"terminated", to_string(r.outcomes[i])}});
  }
  return {{"n_trials", r.n_trials},
          {"n_reached_goal", r.n_reached_goal},
          {"n_hit_boundary", r.n_hit_boundary},
          {"n_nonconverged", r.n_nonconverged},
          {"trials", trials}};
}

inline void write_rollouts_csv(std::ostream& out, const std::vector<Trajectory>& lines) {
  const Eigen::Index d = lines.empty() || lines.front().empty() ? 0 : lines.front().front().size();
  out << "line,step";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << (i + 1);
  out << '\n';
  out.precision(17);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    for (std::size_t k = 0; k < lines[l].size(); ++k) {
      out << l << ',' << k;
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << lines[l][k][i];
      out << '\n';
    }
  }
}

// ---- metrics ----------------------------------------------------------------

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json demos = nlohmann::json::array();
  for (std::size_t i = 0; i < m.demo_ids.size(); ++i) {
    nlohmann::json d = {{"id", m.demo_ids[i]},
                        {"dtwd", number_or_null(m.per_demo_dtwd[i])},
                        {"sea", number_or_null(m.per_demo_sea[i])}};
    if (!m.failures[i].empty()) d["failure"] = m.failures[i];
    demos.push_back(d);
  }
  return {{"per_demo", demos},
          {"mean_dtwd", number_or_null(m.mean_dtwd)},
          {"std_dtwd", number_or_null(m.std_dtwd)},
          {"mean_sea", number_or_null(m.mean_sea)},
          {"std_sea", number_or_null(m.std_sea)},
          {"evaluated", m.evaluated},
          {"dtw_normalized", m.dtw_normalized}};
}

inline void write_metrics_csv_row(std::ostream& out, const MetricsReport& m, bool header) {
  if (header) out << "mean_dtwd,std_dtwd,mean_sea,std_sea,evaluated\n";
  out.precision(17);
  out << m.mean_dtwd << ',' << m.std_dtwd << ',' << m.mean_sea << ',' << m.std_sea << ','
      << m.evaluated << '\n';
}

// ---- simulation -------------------------------------------------------------

inline void write_sim_trajectory_csv(std::ostream& out, const SimulationResult& r) {
  out << "t,x,y,theta,v,omega\n";
  out.precision(17);
  for (const auto& s : r.samples) {
    out << s.t << ',' << s.state.position.x() << ',' << s.state.position.y() << ',' << s.state.heading
        << ',' << s.state.linear_speed << ',' << s.state.angular_rate << '\n';
  }
}

inline nlohmann::json simulation_to_json(const SimulationResult& r) {
  return {{"success", r.success},
          {"time_to_goal", r.time_to_goal ? nlohmann::json(*r.time_to_goal) : nlohmann::json()},
          {"cross_track", {{"mean", r.cross_track.mean}, {"max", r.cross_track.max}, {"p95", r.cross_track.p95}}},
          {"final_world", {r.final_world.x(), r.final_world.y()}},
          {"final_field", to_json_array(r.final_field)},
          {"steps", r.samples.empty() ? 0 : r.samples.size() - 1}};
}

// ---- SVG --------------------------------------------------------------------

/// Minimal SVG canvas mapping a 2-D data box onto a fixed pixel frame
/// (y pointing up).
class SvgCanvas {
 public:
  SvgCanvas(const BoundingBox& box, double width = 600.0) : box_(box), width_(width) {
    if (box.dim() != 2) throw DimensionError("SVG output needs 2-D data");
    const State ext = box.hi - box.lo;
    const double ex = ext[0] > 0.0 ? ext[0] : 1.0;
    const double ey = ext[1] > 0.0 ? ext[1] : 1.0;
    px_ = (width_ - 2 * kMargin) / ex;
    height_ = ey * px_ + 2 * kMargin;
  }

  void polyline(const Trajectory& pts, const std::string& stroke, double w = 1.0) {
    if (pts.size() < 2) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << w << "\" points=\"";
    for (const auto& p : pts) body_ << x(p[0]) << ',' << y(p[1]) << ' ';
    body_ << "\"/>\n";
  }

  void circle(const State& p, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << x(p[0]) << "\" cy=\"" << y(p[1]) << "\" r=\"" << r << "\" fill=\"" << fill
          << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
      << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return s.str();
  }

 private:
  static constexpr double kMargin = 10.0;
  double x(double v) const { return kMargin + (v - box_.lo[0]) * px_; }
  double y(double v) const { return height_ - kMargin - (v - box_.lo[1]) * px_; }

  BoundingBox box_;
  double width_;
  double height_ = 0.0;
  double px_ = 1.0;
  std::ostringstream body_;
};

/// Streamlines (rollouts) in blue, demos in black, goal in red.
inline std::string streamlines_svg(const BoundingBox& box, const std::vector<Trajectory>& streamlines,
                                   const std::vector<Trajectory>& demos, const State& goal) {
  SvgCanvas c(box);
  for (const auto& s : streamlines) c.polyline(s, "#3b6fb6", 0.8);
  for (const auto& d : demos) c.polyline(d, "black", 1.5);
  c.circle(goal, 4.0, "#c0392b");
  return c.str();
}

inline std::string unit_circle_svg(const SpectralReport& r) {
  double extent = std::max(1.0, r.max_modulus) * 1.1;
  BoundingBox box{State{{-extent, -extent}}, State{{extent, extent}}};
  SvgCanvas c(box, 400.0);
  Trajectory circle;
  for (int k = 0; k <= 360; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 360.0;
    circle.push_back(State{{std::cos(a), std::sin(a)}});
  }
  c.polyline(circle, "gray", 1.0);
  for (const auto& l : r.eigenvalues) c.circle(State{{l.real(), l.imag()}}, 3.0, "#3b6fb6");
  return c.str();
}

}  // namespace koopmotion
