#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

/// Runs the CLI with `args`, capturing stderr; stdout is discarded.
Run cli(const std::string& args) {
  const fs::path err_file = fs::temp_directory_path() / "koopmotion_cli_err.txt";
  const std::string cmd = std::string(KOOPMOTION_CLI_PATH) + " " + args + " >/dev/null 2>" + err_file.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(err_file);
  r.err.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("koopmotion_cli_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

/// Synthetic corpus plus a quickly trained model, shared by the tests below.
const fs::path& trained_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh("trained");
    EXPECT_EQ(cli("synth --kind s_curve --out " + d.string()).status, 0);
    EXPECT_EQ(cli("train " + (d / "corpus.csv").string() + " --nu 16 --rank 4 --epochs 3 --out " +
                  (d / "run").string())
                  .status,
              0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, MissingCorpusIsInputErrorJson) {
  const auto r = cli("train /definitely/missing.csv --out " + fresh("missing").string());
  EXPECT_EQ(r.status, 2);
  const auto j = nlohmann::json::parse(r.err);
  EXPECT_TRUE(j.contains("error"));
  EXPECT_TRUE(j.contains("message"));
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(cli("frobnicate").status, 2);
}

TEST(Cli, CorruptCheckpointIsInputError) {
  const fs::path d = fresh("corrupt");
  fs::create_directories(d);
  std::ofstream(d / "model.json") << "{\"version\": \"1\", \"d\": ";
  const auto r = cli("spectra " + (d / "model.json").string() + " --out " + (d / "o").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err).at("error"), "corrupted_checkpoint");
}

TEST(Cli, TrainManifestRecordsStrideAndPairs) {
  const auto m = read_json(trained_dir() / "run" / "manifest.json");
  EXPECT_EQ(m.at("command"), "train");
  EXPECT_EQ(m.at("stride"), 40);
  EXPECT_EQ(m.at("pairs"), 168);
  EXPECT_EQ(m.at("iterations"), 33);
  EXPECT_EQ(m.at("inputs").size(), 1u);
  EXPECT_EQ(line_count(trained_dir() / "run" / "loss.csv"), 34u);
}

TEST(Cli, FieldResolutionTwoGivesFourRows) {
  const fs::path out = fresh("field");
  ASSERT_EQ(cli("field " + (trained_dir() / "run" / "model.json").string() + " --resolution 2 --out " + out.string())
                .status,
            0);
  EXPECT_EQ(line_count(out / "field.csv"), 5u);  // header + 4
}

TEST(Cli, SpectraWritesStabilityVerdict) {
  const fs::path out = fresh("spectra");
  ASSERT_EQ(cli("spectra " + (trained_dir() / "run" / "model.json").string() + " --resolution 5 --out " +
                out.string())
                .status,
            0);
  const auto j = read_json(out / "spectrum.json");
  EXPECT_TRUE(j.contains("stable"));
  EXPECT_EQ(line_count(out / "eigenfunction.csv"), 26u);
}

TEST(Cli, ConvergenceAndEvalRun) {
  const fs::path out = fresh("conv");
  const auto model = (trained_dir() / "run" / "model.json").string();
  ASSERT_EQ(cli("convergence " + model + " --n 5 --out " + out.string()).status, 0);
  EXPECT_EQ(read_json(out / "convergence.json").at("n_trials"), 5);
  ASSERT_EQ(cli("eval " + model + " " + (trained_dir() / "corpus.csv").string() + " --out " + out.string()).status, 0);
  EXPECT_EQ(read_json(out / "metrics.json").at("dtw_normalized"), false);
}

TEST(Cli, BadStartIsUsageError) {
  const auto r = cli("simulate " + (trained_dir() / "run" / "model.json").string() + " --start 1,2,3 --out " +
                     fresh("sim").string());
  EXPECT_EQ(r.status, 2);
}
