// koopmotion command-line tool: synth, train, eval, convergence, spectra,
// field, simulate, sweep.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "koopmotion/koopmotion.hpp"

namespace fs = std::filesystem;
using namespace koopmotion;
using nlohmann::json;

namespace {

constexpr int kExitNumeric = 1;
constexpr int kExitInput = 2;

int exit_code_for(const Error& e) {
  const std::string& k = e.kind();
  if (k == "diverged_training" || k == "numeric_blowup" || k == "eigensolver_error" ||
      k == "degenerate_field") {
    return kExitNumeric;
  }
  return kExitInput;
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InputError("invalid number '" + cell + "' in list '" + s + "'");
    }
  }
  return out;
}

KoopmanModel load_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("checkpoint not found: '" + path.string() + "'");
  return load_model(path);
}

DemonstrationSet load_set(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("corpus not found: '" + path.string() + "'");
  return load_corpus(path);
}

/// Training flags shared by train and sweep; unset flags leave the config
/// (defaults or --config file) untouched.
struct TrainFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int stride = 40;
  std::optional<int> nu, rank, epochs, batch_size;
  std::optional<double> beta_k, beta_d, beta_g, lr;
  bool normalize = false;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "TrainingConfig JSON (or a train manifest)");
    app->add_option("--seed", seed, "training seed");
    app->add_option("--stride", stride, "keep every stride-th sample")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--nu", nu, "number of Fourier features (default 1024)");
    app->add_option("--rank", rank, "operator rank r (default 32)");
    app->add_option("--beta-k", beta_k, "Koopman loss weight (default 1)");
    app->add_option("--beta-d", beta_d, "divergence loss weight (default 0.01)");
    app->add_option("--beta-g", beta_g, "goal loss weight (default 0.01)");
    app->add_option("--lr", lr, "Adam learning rate (default 8e-4)");
    app->add_option("--epochs", epochs, "epochs (default 200)");
    app->add_option("--batch-size", batch_size, "mini-batch size (default 16)");
    app->add_flag("--normalize", normalize, "train in box-normalized coordinates");
  }

  TrainingConfig build(CLI::App* app) const {
    TrainingConfig c;
    if (!config_path.empty()) {
      json j = read_json_file(config_path);
      // A train manifest carries the config and the stride it was run with.
      if (j.contains("command") && j.contains("config")) {
        if (j.contains("stride") && app->count("--stride") == 0) stride_from_manifest = j.at("stride").get<int>();
        j = j.at("config");
      }
      try {
        c = j.get<TrainingConfig>();
      } catch (const json::exception& e) {
        throw InputError("invalid training config '" + config_path + "': " + e.what());
      }
    }
    if (seed) c.seed = *seed;
    if (nu) c.nu = *nu;
    if (rank) c.rank = *rank;
    if (beta_k) c.weights.beta_k = *beta_k;
    if (beta_d) c.weights.beta_d = *beta_d;
    if (beta_g) c.weights.beta_g = *beta_g;
    if (lr) c.learning_rate = *lr;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (normalize) c.normalize = true;
    c.validate();
    return c;
  }

  int effective_stride() const { return stride_from_manifest.value_or(stride); }

  mutable std::optional<int> stride_from_manifest;
};

Trajectory streamline_starts(const BoundingBox& box, int per_axis) {
  return grid_points(box, std::vector<int>(static_cast<std::size_t>(box.dim()), per_axis));
}

std::vector<Trajectory> streamlines(const FlowField& field, const Trajectory& starts,
                                    const RolloutLimits& limits) {
  std::vector<Trajectory> out;
  for (const auto& s : starts) out.push_back(rollout(field, s, limits).states);
  return out;
}

void write_text(const fs::path& path, const std::string& text, RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  manifest.add_output(path);
}

void finish(RunManifest& manifest, const fs::path& out_dir, Clock::time_point t0) {
  manifest.wall_seconds = seconds_since(t0);
  const fs::path path = out_dir / "manifest.json";
  manifest.add_output(path);
  write_json(manifest.to_json(), path);
  std::cout << "wrote " << path.string() << '\n';
}

// ---- commands ---------------------------------------------------------------

int cmd_synth(const std::string& kind, std::uint64_t seed, const fs::path& out_dir) {
  const auto t0 = Clock::now();
  ensure_dir(out_dir);
  DemonstrationSet set;
  if (kind == "s_curve") set = synthetic::s_curve(7, 1000, 0.01, seed == 0 ? 7 : seed);
  else if (kind == "two_start") set = synthetic::two_start(3, 1000, 0.01, seed == 0 ? 11 : seed);
  else if (kind == "straight_line") set = synthetic::straight_line();
  else throw InputError("unknown corpus kind '" + kind + "' (s_curve, two_start, straight_line)");
  const fs::path path = out_dir / "corpus.csv";
  write_corpus_csv(set, path);
  RunManifest m;
  m.command = "synth";
  m.seed = seed;
  m.config = {{"kind", kind}};
  m.add_output(path);
  m.extra["demos"] = set.demos().size();
  m.extra["points"] = set.all_points().size();
  finish(m, out_dir, t0);
  return 0;
}

int cmd_train(const fs::path& corpus, const TrainFlags& flags, CLI::App* app, const fs::path& out_dir,
              bool svg) {
  const auto t0 = Clock::now();
  const TrainingConfig config = flags.build(app);
  const int stride = flags.effective_stride();
  const DemonstrationSet full = load_set(corpus);
  const DemonstrationSet set = subsample(full, stride);
  ensure_dir(out_dir);

  RunManifest m;
  m.command = "train";
  m.config = config;
  m.seed = config.seed;
  m.add_input(corpus);
  m.extra["stride"] = stride;
  m.extra["pairs"] = training_pairs(set).size();

  const TrainingResult result = train(set, config);
  const fs::path model_path = out_dir / "model.json";
  save_model(result.model, model_path);
  m.add_output(model_path);

  const fs::path loss_path = out_dir / "loss.csv";
  {
    auto out = open_output(loss_path);
    write_loss_csv(out, result.report.history);
  }
  m.add_output(loss_path);

  const auto& r = result.report;
  const json report = {{"iterations", r.history.size()},
                       {"batches_per_epoch", r.batches_per_epoch},
                       {"pairs", r.pairs},
                       {"seed", r.seed},
                       {"wall_seconds", r.wall_seconds},
                       {"final_model_path", model_path.string()},
                       {"final_loss",
                        r.history.empty() ? json() : json{{"koopman", r.history.back().koopman},
                                                          {"divergence", r.history.back().flow_divergence},
                                                          {"goal", r.history.back().goal},
                                                          {"total", r.history.back().total}}}};
  const fs::path report_path = out_dir / "training_report.json";
  write_json(report, report_path);
  m.add_output(report_path);
  m.extra["iterations"] = r.history.size();

  if (svg && set.dim() == 2) {
    const FlowField field(result.model);
    const RolloutLimits limits = RolloutDefaults::for_set(set);
    std::vector<Trajectory> demos;
    for (const auto& d : full.demos()) demos.push_back(d.points);
    write_text(out_dir / "streamlines.svg",
               streamlines_svg(limits.bounds, streamlines(field, streamline_starts(limits.bounds, 8), limits),
                               demos, set.goal()),
               m);
  }
  finish(m, out_dir, t0);
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& corpus, int stride, const fs::path& out_dir,
             bool svg) {
  const auto t0 = Clock::now();
  const KoopmanModel model = load_checkpoint(checkpoint);
  const DemonstrationSet full = load_set(corpus);
  const DemonstrationSet set = subsample(full, stride);
  ensure_dir(out_dir);
  const FlowField field(model);
  const RolloutLimits limits = RolloutDefaults::for_set(set);
  const MetricsReport report = evaluate(field, full, stride, limits);

  RunManifest m;
  m.command = "eval";
  m.config = {{"stride", stride}};
  m.add_input(checkpoint);
  m.add_input(corpus);
  const fs::path json_path = out_dir / "metrics.json";
  write_json(metrics_to_json(report), json_path);
  m.add_output(json_path);
  const fs::path csv_path = out_dir / "metrics.csv";
  {
    auto out = open_output(csv_path);
    write_metrics_csv_row(out, report, true);
  }
  m.add_output(csv_path);

  std::vector<Trajectory> predictions;
  for (const auto& d : full.demos()) {
    try {
      predictions.push_back(substep_rollout(field, d.points.front(), stride, limits).states);
    } catch (const NumericBlowupError&) {
      predictions.push_back({d.points.front()});
    }
  }
  const fs::path roll_path = out_dir / "rollouts.csv";
  {
    auto out = open_output(roll_path);
    write_rollouts_csv(out, predictions);
  }
  m.add_output(roll_path);
  if (svg && set.dim() == 2) {
    std::vector<Trajectory> demos;
    for (const auto& d : full.demos()) demos.push_back(d.points);
    write_text(out_dir / "rollouts.svg", streamlines_svg(limits.bounds, predictions, demos, set.goal()), m);
  }
  m.extra["mean_dtwd"] = number_or_null(report.mean_dtwd);
  m.extra["mean_sea"] = number_or_null(report.mean_sea);
  finish(m, out_dir, t0);
  return report.evaluated == full.demos().size() ? 0 : kExitNumeric;
}

int cmd_convergence(const fs::path& checkpoint, std::size_t n, std::uint64_t seed,
                    const std::string& corpus, int stride, double enlarge, const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const KoopmanModel model = load_checkpoint(checkpoint);
  const FlowField field(model);
  RunManifest m;
  m.command = "convergence";
  m.seed = seed;
  m.add_input(checkpoint);

  RolloutLimits limits;
  Trajectory exclusion;
  if (!corpus.empty()) {
    const DemonstrationSet set = subsample(load_set(corpus), stride);
    limits = RolloutDefaults::for_set(set);
    exclusion = set.initial_points();
    m.add_input(corpus);
  } else {
    limits = RolloutDefaults::for_model(model);
  }
  ensure_dir(out_dir);

  ConvergenceOptions opt;
  opt.n = n;
  opt.box = limits.bounds;
  opt.exclusion = exclusion;
  opt.eps_exclude = limits.eps_goal;
  opt.seed = seed;
  opt.limits = limits;
  const ConvergenceReport report = convergence_study(field, opt);
  json j = convergence_to_json(report);
  j["eps_goal"] = limits.eps_goal;
  j["max_steps"] = limits.max_steps;
  j["bounds"] = {{"lo", to_json_array(limits.bounds.lo)}, {"hi", to_json_array(limits.bounds.hi)}};
  if (enlarge > 0.0) {
    const BoundingBox bigger = model.domain_box.inflated(enlarge);
    const ConvergenceReport again = recheck_boundary_trials(field, report, limits, bigger);
    j["boundary_recheck"] = convergence_to_json(again);
    j["boundary_recheck"]["inflation"] = enlarge;
  }
  m.config = {{"n", n}, {"stride", stride}, {"enlarge", enlarge}, {"corpus", corpus}};
  const fs::path path = out_dir / "convergence.json";
  write_json(j, path);
  m.add_output(path);
  m.extra["n_reached_goal"] = report.n_reached_goal;
  m.extra["n_hit_boundary"] = report.n_hit_boundary;
  m.extra["n_nonconverged"] = report.n_nonconverged;
  finish(m, out_dir, t0);
  std::cout << "reached_goal " << report.n_reached_goal << ", hit_boundary " << report.n_hit_boundary
            << ", nonconverged " << report.n_nonconverged << '\n';
  return 0;
}

int cmd_spectra(const fs::path& checkpoint, bool left, int resolution, std::size_t index, bool vectors,
                const fs::path& out_dir, bool svg) {
  const auto t0 = Clock::now();
  const KoopmanModel model = load_checkpoint(checkpoint);
  ensure_dir(out_dir);
  const SpectralReport report = eigen_decompose(model, left ? EigenvectorSide::Left : EigenvectorSide::Right);
  RunManifest m;
  m.command = "spectra";
  m.config = {{"left", left}, {"resolution", resolution}, {"index", index}};
  m.add_input(checkpoint);
  const fs::path spec_path = out_dir / "spectrum.json";
  write_json(spectral_to_json(report, vectors), spec_path);
  m.add_output(spec_path);
  const fs::path circle_path = out_dir / "unit_circle.csv";
  {
    auto out = open_output(circle_path);
    write_unit_circle_csv(out, report);
  }
  m.add_output(circle_path);
  if (!report.eigenvalues.empty() && index < report.eigenvalues.size()) {
    const Trajectory grid = grid_points(model.domain_box,
                                        std::vector<int>(static_cast<std::size_t>(model.dim()), resolution));
    const fs::path ef_path = out_dir / "eigenfunction.csv";
    auto out = open_output(ef_path);
    write_eigenfunction_csv(out, grid, eigenfunction_grid(model, report, index, grid));
    m.add_output(ef_path);
  } else if (!report.eigenvalues.empty()) {
    throw InputError("eigenfunction index " + std::to_string(index) + " out of range (" +
                     std::to_string(report.eigenvalues.size()) + " nonzero eigenvalues)");
  }
  if (svg) write_text(out_dir / "unit_circle.svg", unit_circle_svg(report), m);
  m.extra["stable"] = report.stable;
  m.extra["max_modulus"] = report.max_modulus;
  finish(m, out_dir, t0);
  std::cout << "max |lambda| " << report.max_modulus << (report.stable ? " (stable)" : " (not stable)") << '\n';
  return 0;
}

int cmd_field(const fs::path& checkpoint, const std::string& resolution, const fs::path& out_dir, bool svg) {
  const auto t0 = Clock::now();
  const KoopmanModel model = load_checkpoint(checkpoint);
  ensure_dir(out_dir);
  std::vector<int> counts;
  for (double r : parse_list(resolution)) {
    if (r != static_cast<int>(r)) throw InputError("resolution must be integral");
    counts.push_back(static_cast<int>(r));
  }
  if (counts.size() == 1) counts.assign(static_cast<std::size_t>(model.dim()), counts.front());
  const FlowField field(model);
  const auto grid = field_grid(field, counts, model.domain_box);
  RunManifest m;
  m.command = "field";
  m.config = {{"resolution", counts}};
  m.add_input(checkpoint);
  const fs::path path = out_dir / "field.csv";
  {
    auto out = open_output(path);
    write_field_csv(out, grid);
  }
  m.add_output(path);
  if (svg && model.dim() == 2 && model.goal) {
    const RolloutLimits limits = RolloutDefaults::for_model(model);
    write_text(out_dir / "streamlines.svg",
               streamlines_svg(limits.bounds, streamlines(field, streamline_starts(limits.bounds, 8), limits), {},
                               *model.goal),
               m);
  }
  finish(m, out_dir, t0);
  return 0;
}

int cmd_simulate(const fs::path& checkpoint, const std::string& sim_config, const std::string& start,
                 const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const KoopmanModel model = load_checkpoint(checkpoint);
  if (model.dim() != 2) throw DimensionError("simulate needs a 2-D model");
  SimulationConfig config;
  RunManifest m;
  m.command = "simulate";
  m.add_input(checkpoint);
  if (!sim_config.empty()) {
    try {
      config = read_json_file(sim_config).get<SimulationConfig>();
    } catch (const json::exception& e) {
      throw InputError("invalid simulation config: " + std::string(e.what()));
    }
    m.add_input(sim_config);
  }
  config.validate();
  const auto xy = parse_list(start);
  if (xy.size() != 2) throw InputError("--start needs two comma-separated field coordinates");
  ensure_dir(out_dir);

  const RolloutLimits limits = RolloutDefaults::for_model(model);
  const WorkspaceMap map = WorkspaceMap::fit(model.domain_box, config.tank_width, config.tank_height);
  const FlowField field = vehicle_field(FlowField(model), map, config, grid_points(model.domain_box, {25, 25}));
  const SimulationResult result = simulate_run(field, map, config, map.to_world(State{{xy[0], xy[1]}}), limits);

  m.config = config;
  m.config["start"] = xy;
  const fs::path traj_path = out_dir / "trajectory.csv";
  {
    auto out = open_output(traj_path);
    write_sim_trajectory_csv(out, result);
  }
  m.add_output(traj_path);
  json report = simulation_to_json(result);
  report["eps_goal"] = limits.eps_goal;
  report["field_scale"] = field.scale();
  report["workspace_scale"] = map.scale;
  const fs::path report_path = out_dir / "report.json";
  write_json(report, report_path);
  m.add_output(report_path);
  m.extra["success"] = result.success;
  finish(m, out_dir, t0);
  std::cout << (result.success ? "reached goal" : "did not reach goal") << '\n';
  return 0;
}

int cmd_sweep(const fs::path& corpus, const std::string& sweep_config, const TrainFlags& flags, CLI::App* app,
              const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const TrainingConfig base = flags.build(app);
  const DemonstrationSet full = load_set(corpus);
  SweepGrid grid;
  json cfg = json::object();
  if (!sweep_config.empty()) cfg = read_json_file(sweep_config);
  try {
    for (const auto& [key, v] : cfg.items()) {
      if (key == "nus") grid.nus = v.get<std::vector<int>>();
      else if (key == "weights") {
        for (const auto& w : v) grid.weights.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
      } else if (key == "pairwise") {
        auto more = pairwise_weight_grid(v.get<std::vector<double>>(), base.weights);
        grid.weights.insert(grid.weights.end(), more.begin(), more.end());
      } else if (key == "convergence_trials") grid.convergence_trials = v.get<std::size_t>();
      else if (key == "convergence_seed") grid.convergence_seed = v.get<std::uint64_t>();
      else throw InputError("unknown sweep config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InputError("invalid sweep config: " + std::string(e.what()));
  }
  if (!cfg.contains("nus")) grid.nus = {base.nu};
  if (!cfg.contains("weights") && !cfg.contains("pairwise")) grid.weights = {base.weights};
  ensure_dir(out_dir);

  const int stride = flags.effective_stride();
  const auto rows = ablation_sweep(full, stride, base, grid, [](std::size_t i, std::size_t total, const SweepRow& r) {
    std::cerr << "row " << i << "/" << total << " nu=" << r.nu << " status=" << r.status << '\n';
  });
  RunManifest m;
  m.command = "sweep";
  m.config = {{"base", base}, {"sweep", cfg}, {"stride", stride}};
  m.seed = base.seed;
  m.add_input(corpus);
  if (!sweep_config.empty()) m.add_input(sweep_config);
  const fs::path path = out_dir / "sweep.csv";
  {
    auto out = open_output(path);
    write_sweep_csv(out, rows);
  }
  m.add_output(path);
  m.extra["rows"] = rows.size();
  finish(m, out_dir, t0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman flow-field learning from demonstrations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string out = "koopmotion_out";
  bool svg = false;

  auto* synth = app.add_subcommand("synth", "write a synthetic demonstration corpus");
  std::string synth_kind = "s_curve";
  std::uint64_t synth_seed = 0;
  synth->add_option("--kind", synth_kind, "s_curve, two_start or straight_line")->capture_default_str();
  synth->add_option("--seed", synth_seed, "jitter seed (0 = built-in)");
  synth->add_option("--out", out, "output directory")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train a model on a corpus");
  std::string corpus;
  TrainFlags train_flags;
  train_cmd->add_option("corpus", corpus, "corpus file, directory or manifest")->required();
  train_flags.add_to(train_cmd);
  train_cmd->add_option("--out", out, "output directory")->capture_default_str();
  train_cmd->add_flag("--svg", svg, "also write an SVG of streamlines");

  auto* eval_cmd = app.add_subcommand("eval", "DTWD/SEA against the full-resolution corpus");
  std::string checkpoint;
  int eval_stride = 40;
  eval_cmd->add_option("checkpoint", checkpoint)->required();
  eval_cmd->add_option("corpus", corpus)->required();
  eval_cmd->add_option("--stride", eval_stride, "stride the model was trained with")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", out)->capture_default_str();
  eval_cmd->add_flag("--svg", svg);

  auto* conv_cmd = app.add_subcommand("convergence", "random initial-condition convergence study");
  std::size_t conv_n = 500;
  std::uint64_t conv_seed = 0;
  std::string conv_corpus;
  int conv_stride = 40;
  double enlarge = 0.0;
  conv_cmd->add_option("checkpoint", checkpoint)->required();
  conv_cmd->add_option("--n", conv_n, "number of trials")->capture_default_str()->check(CLI::PositiveNumber);
  conv_cmd->add_option("--seed", conv_seed, "sampling seed")->capture_default_str();
  conv_cmd->add_option("--corpus", conv_corpus, "training corpus (goal and excluded starts)");
  conv_cmd->add_option("--stride", conv_stride, "stride used with --corpus")->capture_default_str();
  conv_cmd->add_option("--enlarge", enlarge, "re-run boundary trials in the box inflated by this fraction");
  conv_cmd->add_option("--out", out)->capture_default_str();

  auto* spec_cmd = app.add_subcommand("spectra", "eigenvalues, stability and eigenfunctions");
  bool left = false, vectors = false;
  int resolution = 50;
  std::size_t eig_index = 0;
  spec_cmd->add_option("checkpoint", checkpoint)->required();
  spec_cmd->add_flag("--left", left, "use left eigenvectors for eigenfunctions");
  spec_cmd->add_flag("--vectors", vectors, "include eigenvectors in spectrum.json");
  spec_cmd->add_option("--resolution", resolution, "eigenfunction grid points per axis")->capture_default_str()->check(CLI::Range(2, 100000));
  spec_cmd->add_option("--index", eig_index, "eigenfunction index (0 = largest modulus)")->capture_default_str();
  spec_cmd->add_option("--out", out)->capture_default_str();
  spec_cmd->add_flag("--svg", svg);

  auto* field_cmd = app.add_subcommand("field", "field and divergence on a grid");
  std::string field_res = "50";
  field_cmd->add_option("checkpoint", checkpoint)->required();
  field_cmd->add_option("--resolution", field_res, "points per axis (N or N1,N2,...)")->capture_default_str();
  field_cmd->add_option("--out", out)->capture_default_str();
  field_cmd->add_flag("--svg", svg);

  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop vehicle run on the learned field");
  std::string sim_config, start;
  sim_cmd->add_option("checkpoint", checkpoint)->required();
  sim_cmd->add_option("--sim-config", sim_config, "simulation config JSON");
  sim_cmd->add_option("--start", start, "start x,y in field coordinates")->required();
  sim_cmd->add_option("--out", out)->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "ablation table over feature counts and loss weights");
  std::string sweep_config;
  TrainFlags sweep_flags;
  sweep_cmd->add_option("corpus", corpus)->required();
  sweep_cmd->add_option("--sweep-config", sweep_config, "JSON with nus, weights/pairwise, convergence_trials");
  sweep_flags.add_to(sweep_cmd);
  sweep_cmd->add_option("--out", out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage_error", e.what());
    return kExitInput;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_kind, synth_seed, out);
    if (train_cmd->parsed()) return cmd_train(corpus, train_flags, train_cmd, out, svg);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint, corpus, eval_stride, out, svg);
    if (conv_cmd->parsed()) return cmd_convergence(checkpoint, conv_n, conv_seed, conv_corpus, conv_stride, enlarge, out);
    if (spec_cmd->parsed()) return cmd_spectra(checkpoint, left, resolution, eig_index, vectors, out, svg);
    if (field_cmd->parsed()) return cmd_field(checkpoint, field_res, out, svg);
    if (sim_cmd->parsed()) return cmd_simulate(checkpoint, sim_config, start, out);
    if (sweep_cmd->parsed()) return cmd_sweep(corpus, sweep_config, sweep_flags, sweep_cmd, out);
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    report_error("input_error", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    report_error("internal_error", e.what());
    return kExitNumeric;
  }
  return kExitInput;
}
