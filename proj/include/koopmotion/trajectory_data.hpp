#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "koopmotion/errors.hpp"
#include "koopmotion/geometry.hpp"

namespace koopmotion {

/// One timestamped demonstration with uniform sampling interval `dt`.
struct Demonstration {
  std::string id;
  double dt = 0.0;
  Trajectory points;

  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }

  void validate() const {
    if (points.size() < 2) {
      throw InsufficientDataError("demonstration '" + id + "' has " +
                                  std::to_string(points.size()) + " point(s); need at least 2");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw InputError("demonstration '" + id + "' has non-positive dt");
    }
    const auto d = dim();
    if (d < 1) throw DimensionError("demonstration '" + id + "' has zero-dimensional points");
    for (const auto& p : points) {
      if (p.size() != d) {
        throw DimensionError("demonstration '" + id + "' mixes point dimensions");
      }
    }
  }
};

struct TrainingPair {
  State x_k;
  State x_k1;
};

/// Demonstrations sharing one goal point. Construct through `make`, which
/// enforces the shared-goal and shared-dimension invariants.
class DemonstrationSet {
 public:
  /// Relative goal tolerance used when none is given: a fraction of the
  /// bounding-box diagonal.
  static constexpr double kDefaultGoalToleranceFraction = 0.01;

  DemonstrationSet() = default;

  static DemonstrationSet make(std::vector<Demonstration> demos,
                               std::optional<double> goal_tolerance = std::nullopt,
                               int stride = 1) {
    DemonstrationSet set;
    set.demos_ = std::move(demos);
    set.stride_ = stride;
    if (set.demos_.empty()) return set;
    const auto d = set.demos_.front().dim();
    for (const auto& demo : set.demos_) {
      demo.validate();
      if (demo.dim() != d) {
        throw DimensionError("demonstration '" + demo.id + "' has dimension " +
                             std::to_string(demo.dim()) + ", expected " + std::to_string(d));
      }
      for (const auto& p : demo.points) set.box_.expand(p);
    }
    set.goal_ = set.demos_.front().points.back();
    set.goal_tolerance_ = goal_tolerance.value_or(kDefaultGoalToleranceFraction * set.box_.diagonal());
    for (const auto& demo : set.demos_) {
      const double gap = (demo.points.back() - set.goal_).norm();
      if (gap > set.goal_tolerance_) {
        throw GoalMismatchError("demonstration '" + demo.id + "' ends " + std::to_string(gap) +
                                " units from the goal (tolerance " +
                                std::to_string(set.goal_tolerance_) + ")");
      }
    }
    return set;
  }

  const std::vector<Demonstration>& demos() const { return demos_; }
  const State& goal() const { return goal_; }
  int stride() const { return stride_; }
  const BoundingBox& domain_box() const { return box_; }
  double goal_tolerance() const { return goal_tolerance_; }
  bool empty() const { return demos_.empty(); }
  Eigen::Index dim() const { return goal_.size(); }

  std::size_t longest_demo() const {
    std::size_t n = 0;
    for (const auto& demo : demos_) n = std::max(n, demo.points.size());
    return n;
  }

  /// Sampling interval shared by the demos (the first demo's when they differ).
  double dt() const { return demos_.empty() ? 0.0 : demos_.front().dt; }

  Trajectory initial_points() const {
    Trajectory starts;
    for (const auto& demo : demos_) starts.push_back(demo.points.front());
    return starts;
  }

  Trajectory all_points() const {
    Trajectory pts;
    for (const auto& demo : demos_) pts.insert(pts.end(), demo.points.begin(), demo.points.end());
    return pts;
  }

 private:
  std::vector<Demonstration> demos_;
  State goal_;
  int stride_ = 1;
  BoundingBox box_;
  double goal_tolerance_ = 0.0;
};

/// Keeps every `stride`-th point. When the final original point does not
/// fall on the stride grid it replaces the last retained point, so the goal
/// and the sample count ceil(n / stride) are both preserved.
inline DemonstrationSet subsample(const DemonstrationSet& set, int stride) {
  if (stride < 1) throw InputError("stride must be >= 1, got " + std::to_string(stride));
  if (stride == 1) return set;
  std::vector<Demonstration> out;
  out.reserve(set.demos().size());
  for (const auto& demo : set.demos()) {
    Demonstration kept;
    kept.id = demo.id;
    kept.dt = demo.dt * stride;
    const std::size_t n = demo.points.size();
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(stride)) {
      kept.points.push_back(demo.points[i]);
    }
    if ((n - 1) % static_cast<std::size_t>(stride) != 0) {
      if (kept.points.size() == 1) {
        kept.points.push_back(demo.points.back());
      } else {
        kept.points.back() = demo.points.back();
      }
    }
    out.push_back(std::move(kept));
  }
  return DemonstrationSet::make(std::move(out), set.goal_tolerance(), set.stride() * stride);
}

inline std::vector<TrainingPair> training_pairs(const DemonstrationSet& set) {
  std::vector<TrainingPair> pairs;
  for (const auto& demo : set.demos()) {
    if (demo.points.size() < 2) {
      throw InsufficientDataError("demonstration '" + demo.id + "' has fewer than 2 points");
    }
    for (std::size_t k = 0; k + 1 < demo.points.size(); ++k) {
      pairs.push_back({demo.points[k], demo.points[k + 1]});
    }
  }
  return pairs;
}

/// Applies an affine map to every point, the goal and the box.
inline DemonstrationSet transformed(const DemonstrationSet& set, const AffineNormalization& map) {
  std::vector<Demonstration> demos = set.demos();
  for (auto& demo : demos) {
    for (auto& p : demo.points) p = map.forward(p);
  }
  // Dividing by the smallest half-range bounds every mapped goal gap, so the
  // shared-goal check that passed in the original frame passes again.
  return DemonstrationSet::make(std::move(demos),
                                set.goal_tolerance() / map.half_range.minCoeff(), set.stride());
}

enum class CorpusFormat { Auto, Directory, SingleFile, Manifest };

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_number(const std::string& cell, const std::string& file, std::size_t line) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw ParseError(file, line, "non-numeric value '" + cell + "'");
  }
  return value;
}

struct RawDemo {
  std::string id;
  std::vector<double> t;
  Trajectory points;
};

inline double infer_dt(const RawDemo& raw, const std::string& file) {
  if (raw.t.size() < 2) return 0.0;
  const double dt = raw.t[1] - raw.t[0];
  if (!(dt > 0.0)) throw ParseError(file, 3, "time column is not strictly increasing");
  for (std::size_t i = 1; i < raw.t.size(); ++i) {
    const double step = raw.t[i] - raw.t[i - 1];
    if (!(step > 0.0)) throw ParseError(file, i + 2, "time column is not strictly increasing");
    if (std::abs(step - dt) > 1e-3 * dt + 1e-12) {
      throw ParseError(file, i + 2, "non-uniform sampling interval");
    }
  }
  return dt;
}

/// Reads one CSV file. A leading `demo_id` column yields one demo per id in
/// order of first appearance; otherwise the whole file is one demo.
inline std::vector<RawDemo> read_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file '" + file + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
      line.erase(0, 3);  // UTF-8 BOM
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError(file, line_no, "missing header");
  const bool has_id = header.front() == "demo_id";
  const std::size_t t_col = has_id ? 1 : 0;
  if (header.size() <= t_col || header[t_col] != "t") {
    throw ParseError(file, line_no, "header must start with 't' or 'demo_id,t'");
  }
  const std::size_t d = header.size() - t_col - 1;
  if (d < 1) throw ParseError(file, line_no, "header declares no state columns");

  std::vector<RawDemo> demos;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(file, line_no,
                       "expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()));
    }
    const std::string id = has_id ? cells[0] : path.stem().string();
    auto [it, inserted] = index.try_emplace(id, demos.size());
    if (inserted) demos.push_back(RawDemo{id, {}, {}});
    RawDemo& demo = demos[it->second];
    demo.t.push_back(parse_number(cells[t_col], file, line_no));
    State p(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      p[static_cast<Eigen::Index>(i)] = parse_number(cells[t_col + 1 + i], file, line_no);
    }
    demo.points.push_back(std::move(p));
  }
  return demos;
}

inline Demonstration finish(RawDemo raw, std::optional<double> dt, const std::string& file) {
  Demonstration demo;
  demo.id = std::move(raw.id);
  const double inferred = infer_dt(raw, file);
  demo.dt = dt.value_or(inferred);
  demo.points = std::move(raw.points);
  return demo;
}

}  // namespace detail

/// Loads a corpus from a directory of per-demo CSV files (sorted by file
/// name), a single CSV file, or a JSON manifest
/// `{"dt": <seconds, optional>, "files": [...], "goal_tolerance": <optional>}`.
inline DemonstrationSet load_corpus(const std::filesystem::path& path,
                                    CorpusFormat format = CorpusFormat::Auto,
                                    std::optional<double> goal_tolerance = std::nullopt) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw InputError("corpus path '" + path.string() + "' does not exist");
  if (format == CorpusFormat::Auto) {
    if (fs::is_directory(path)) {
      format = CorpusFormat::Directory;
    } else if (path.extension() == ".json") {
      format = CorpusFormat::Manifest;
    } else {
      format = CorpusFormat::SingleFile;
    }
  }

  std::vector<fs::path> files;
  std::optional<double> dt;
  switch (format) {
    case CorpusFormat::Directory:
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw InputError("no .csv files in '" + path.string() + "'");
      break;
    case CorpusFormat::SingleFile:
      files.push_back(path);
      break;
    case CorpusFormat::Manifest: {
      std::ifstream in(path);
      nlohmann::json manifest;
      try {
        manifest = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, std::string("invalid manifest JSON: ") + e.what());
      }
      if (!manifest.contains("files") || !manifest["files"].is_array()) {
        throw ParseError(path.string(), 0, "manifest must contain a 'files' array");
      }
      for (const auto& f : manifest["files"]) {
        files.push_back(path.parent_path() / f.get<std::string>());
      }
      if (manifest.contains("dt")) dt = manifest["dt"].get<double>();
      if (!goal_tolerance && manifest.contains("goal_tolerance")) {
        goal_tolerance = manifest["goal_tolerance"].get<double>();
      }
      break;
    }
    case CorpusFormat::Auto:
      break;
  }

  std::vector<Demonstration> demos;
  for (const auto& file : files) {
    for (auto& raw : detail::read_csv(file)) {
      demos.push_back(detail::finish(std::move(raw), dt, file.string()));
    }
  }
  return DemonstrationSet::make(std::move(demos), goal_tolerance);
}

/// Writes a set in the single-file `demo_id,t,x1,...` layout.
inline void write_corpus_csv(const DemonstrationSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "demo_id,t";
  for (Eigen::Index i = 0; i < set.dim(); ++i) out << ",x" << (i + 1);
  out << '\n';
  for (const auto& demo : set.demos()) {
    for (std::size_t k = 0; k < demo.points.size(); ++k) {
      out << demo.id << ',' << static_cast<double>(k) * demo.dt;
      for (Eigen::Index i = 0; i < demo.points[k].size(); ++i) out << ',' << demo.points[k][i];
      out << '\n';
    }
  }
}

}  // namespace koopmotion
