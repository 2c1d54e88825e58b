#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/koopman_model.hpp"

namespace koopmotion {

/// Checkpoint layout version written by `save_model`.
inline constexpr const char* kCheckpointVersion = "1";
inline constexpr const char* kCheckpointFormat = "koopmotion-checkpoint";

namespace detail {

// nlohmann/json prints the shortest decimal that parses back to the same
// double, so plain JSON numbers round-trip bit-exactly.
inline nlohmann::json flat_row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  }
  return v;
}

inline nlohmann::json vec(const Eigen::VectorXd& x) {
  return std::vector<double>(x.data(), x.data() + x.size());
}

inline Eigen::MatrixXd read_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                   const char* name) {
  const auto v = j.at(name).get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw CheckpointError(std::string("array '") + name + "' has " + std::to_string(v.size()) +
                          " entries, expected " + std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = v[static_cast<std::size_t>(i * cols + k)];
  }
  return m;
}

inline Eigen::VectorXd read_vector(const nlohmann::json& j, Eigen::Index n, const char* name) {
  return read_matrix(j, n, 1, name);
}

}  // namespace detail

inline nlohmann::json model_to_json(const KoopmanModel& model) {
  using detail::flat_row_major;
  using detail::vec;
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["d"] = model.dim();
  j["nu"] = model.features();
  j["rank"] = model.rank();
  j["model_dt"] = model.model_dt;
  j["domain_box"] = {{"lo", vec(model.domain_box.lo)}, {"hi", vec(model.domain_box.hi)}};
  if (model.normalization) {
    j["normalization"] = {{"center", vec(model.normalization->center)},
                          {"half_range", vec(model.normalization->half_range)}};
  } else {
    j["normalization"] = nullptr;
  }
  j["goal"] = model.goal ? nlohmann::json(vec(*model.goal)) : nlohmann::json();
  j["longest_demo"] = model.longest_demo;
  j["W"] = flat_row_major(model.lifting.W);
  j["b"] = vec(model.lifting.b);
  j["A"] = flat_row_major(model.A);
  j["B"] = flat_row_major(model.B);
  return j;
}

inline KoopmanModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version")) {
    throw CheckpointError("missing version field");
  }
  const auto version = j.at("version").is_string() ? j.at("version").get<std::string>()
                                                   : j.at("version").dump();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version '" + version + "' is not supported (expected '" +
                       kCheckpointVersion + "')");
  }
  try {
    KoopmanModel m;
    const auto d = j.at("d").get<Eigen::Index>();
    const auto nu = j.at("nu").get<Eigen::Index>();
    const auto r = j.at("rank").get<Eigen::Index>();
    if (d < 1 || nu < 0 || r < 1) throw CheckpointError("invalid dimensions");
    m.model_dt = j.at("model_dt").get<double>();
    m.lifting.W = detail::read_matrix(j, nu, d, "W");
    m.lifting.b = detail::read_vector(j, nu, "b");
    m.A = detail::read_matrix(j, nu + d, r, "A");
    m.B = detail::read_matrix(j, nu + d, r, "B");
    const auto& box = j.at("domain_box");
    m.domain_box.lo = detail::read_vector(box, d, "lo");
    m.domain_box.hi = detail::read_vector(box, d, "hi");
    if (!j.at("normalization").is_null()) {
      const auto& n = j.at("normalization");
      m.normalization = AffineNormalization{detail::read_vector(n, d, "center"),
                                            detail::read_vector(n, d, "half_range")};
    }
    if (j.contains("goal") && !j.at("goal").is_null()) m.goal = detail::read_vector(j, d, "goal");
    if (j.contains("longest_demo")) m.longest_demo = j.at("longest_demo").get<std::size_t>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
  }
}

inline void save_model(const KoopmanModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  out << model_to_json(model).dump() << '\n';
  if (!out) throw InputError("failed writing checkpoint '" + path.string() + "'");
}

inline KoopmanModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError("corrupted checkpoint '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace koopmotion
