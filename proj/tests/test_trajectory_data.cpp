#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "koopmotion/synthetic.hpp"
#include "koopmotion/trajectory_data.hpp"

using namespace koopmotion;
namespace fs = std::filesystem;

namespace {

Demonstration line_demo(const std::string& id, int n, State start, State end, double dt = 0.01) {
  Demonstration d;
  d.id = id;
  d.dt = dt;
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    d.points.push_back((1.0 - s) * start + s * end);
  }
  return d;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("koopmotion_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Subsample, SevenThousandPointCorpusGivesOneHundredSixtyEightPairs) {
  std::vector<Demonstration> demos;
  for (int i = 0; i < 7; ++i) {
    demos.push_back(line_demo("d" + std::to_string(i), 1000, State{{-40.0 + i, 10.0}}, State{{0.0, 0.0}}));
  }
  const auto set = DemonstrationSet::make(demos);
  const auto sub = subsample(set, 40);
  for (const auto& d : sub.demos()) {
    EXPECT_EQ(d.points.size(), 25u);
    EXPECT_EQ(d.points.back(), State(State{{0.0, 0.0}}));
  }
  EXPECT_EQ(training_pairs(sub).size(), 168u);
  EXPECT_DOUBLE_EQ(sub.dt(), 0.4);
}

TEST(Subsample, StrideOneIsIdentity) {
  const auto set = DemonstrationSet::make({line_demo("a", 10, State{{1.0, 1.0}}, State{{0.0, 0.0}})});
  const auto sub = subsample(set, 1);
  EXPECT_EQ(sub.demos().front().points, set.demos().front().points);
}

TEST(Subsample, OnGridEndpointIsKept) {
  const auto set = DemonstrationSet::make({line_demo("a", 9, State{{1.0}}, State{{0.0}})});
  const auto sub = subsample(set, 4);
  ASSERT_EQ(sub.demos().front().points.size(), 3u);
  EXPECT_EQ(sub.demos().front().points.back()[0], 0.0);
}

TEST(Subsample, RejectsNonPositiveStride) {
  const auto set = DemonstrationSet::make({line_demo("a", 9, State{{1.0}}, State{{0.0}})});
  EXPECT_THROW(subsample(set, 0), InputError);
}

TEST(DemonstrationSet, GoalIsFirstDemoEndpoint) {
  auto a = line_demo("a", 5, State{{1.0, 1.0}}, State{{0.0, 0.0}});
  auto b = line_demo("b", 5, State{{-1.0, 1.0}}, State{{0.001, 0.0}});
  const auto set = DemonstrationSet::make({a, b});
  EXPECT_EQ(set.goal(), State(State{{0.0, 0.0}}));
}

TEST(DemonstrationSet, MismatchedGoalsRaise) {
  auto a = line_demo("a", 5, State{{1.0, 1.0}}, State{{0.0, 0.0}});
  auto b = line_demo("b", 5, State{{-1.0, 1.0}}, State{{0.5, 0.0}});
  EXPECT_THROW(DemonstrationSet::make({a, b}), GoalMismatchError);
}

TEST(DemonstrationSet, DimensionMismatchRaises) {
  auto a = line_demo("a", 5, State{{1.0, 1.0}}, State{{0.0, 0.0}});
  auto b = line_demo("b", 5, State{{1.0, 1.0, 1.0}}, State{{0.0, 0.0, 0.0}});
  EXPECT_THROW(DemonstrationSet::make({a, b}), Error);
}

TEST(DemonstrationSet, DomainBoxCoversAllPoints) {
  const auto set = synthetic::s_curve();
  for (const auto& p : set.all_points()) EXPECT_TRUE(set.domain_box().contains(p));
}

TEST(DemonstrationSet, TransformedMapsIntoUnitBox) {
  const auto set = synthetic::s_curve();
  const auto map = AffineNormalization::fit(set.domain_box());
  const auto t = transformed(set, map);
  for (const auto& p : t.all_points()) {
    EXPECT_LE(p.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
  EXPECT_LT((map.inverse(t.goal()) - set.goal()).norm(), 1e-12);
}

TEST(TrainingPairs, ConsecutiveWithinDemosOnly) {
  auto a = line_demo("a", 3, State{{2.0}}, State{{0.0}});
  auto b = line_demo("b", 4, State{{3.0}}, State{{0.0}});
  const auto pairs = training_pairs(DemonstrationSet::make({a, b}));
  ASSERT_EQ(pairs.size(), 5u);
  EXPECT_EQ(pairs[1].x_k1, a.points[2]);
  EXPECT_EQ(pairs[2].x_k, b.points[0]);
}

TEST(LoadCorpus, SingleFileWithDemoIds) {
  const auto dir = temp_dir("single");
  {
    std::ofstream out(dir / "c.csv");
    out << "demo_id,t,x1,x2\n";
    for (int k = 0; k < 3; ++k) out << "a," << 0.1 * k << ',' << 2 - k << ",0\n";
    for (int k = 0; k < 3; ++k) out << "b," << 0.1 * k << ",0," << 2 - k << "\n";
  }
  const auto set = load_corpus(dir / "c.csv");
  ASSERT_EQ(set.demos().size(), 2u);
  EXPECT_NEAR(set.dt(), 0.1, 1e-12);
  EXPECT_EQ(set.dim(), 2);
}

TEST(LoadCorpus, DirectoryOfFiles) {
  const auto dir = temp_dir("dir");
  for (int i = 0; i < 2; ++i) {
    std::ofstream out(dir / ("demo" + std::to_string(i) + ".csv"));
    out << "t,x1\n";
    for (int k = 0; k < 4; ++k) out << 0.5 * k << ',' << (3 - k) * (i + 1) << '\n';
  }
  const auto set = load_corpus(dir);
  EXPECT_EQ(set.demos().size(), 2u);
  EXPECT_NEAR(set.dt(), 0.5, 1e-12);
}

TEST(LoadCorpus, ManifestDeclaresDt) {
  const auto dir = temp_dir("manifest");
  {
    std::ofstream out(dir / "a.csv");
    out << "t,x1\n0,2\n1,1\n2,0\n";
  }
  {
    std::ofstream out(dir / "corpus.json");
    out << R"({"files": ["a.csv"], "dt": 0.25})";
  }
  const auto set = load_corpus(dir / "corpus.json");
  EXPECT_DOUBLE_EQ(set.dt(), 0.25);
}

TEST(LoadCorpus, BadNumberReportsFileAndLine) {
  const auto dir = temp_dir("bad");
  {
    std::ofstream out(dir / "a.csv");
    out << "t,x1\n0,1\n0.1,oops\n";
  }
  try {
    load_corpus(dir / "a.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("a.csv"), std::string::npos);
  }
}

TEST(LoadCorpus, MissingPathIsInputError) {
  EXPECT_THROW(load_corpus("/definitely/not/here.csv"), InputError);
}

TEST(LoadCorpus, RoundTripThroughCsv) {
  const auto dir = temp_dir("roundtrip");
  const auto set = synthetic::two_start(2, 50);
  write_corpus_csv(set, dir / "c.csv");
  const auto back = load_corpus(dir / "c.csv");
  ASSERT_EQ(back.demos().size(), set.demos().size());
  for (std::size_t i = 0; i < set.demos().size(); ++i) {
    ASSERT_EQ(back.demos()[i].points.size(), set.demos()[i].points.size());
    for (std::size_t k = 0; k < set.demos()[i].points.size(); ++k) {
      EXPECT_EQ(back.demos()[i].points[k], set.demos()[i].points[k]);
    }
  }
}

TEST(Geometry, GridPointsLastAxisFastest) {
  const BoundingBox box{State{{0.0, 0.0}}, State{{1.0, 2.0}}};
  const auto g = grid_points(box, {2, 3});
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g[1], State(State{{0.0, 1.0}}));
  EXPECT_EQ(g[3], State(State{{1.0, 0.0}}));
}

TEST(Geometry, InflatedBoxAddsHalfFractionPerSide) {
  const BoundingBox box{State{{0.0, 0.0}}, State{{4.0, 2.0}}};
  const auto big = box.inflated(0.25);
  EXPECT_DOUBLE_EQ(big.lo[0], -0.5);
  EXPECT_DOUBLE_EQ(big.hi[1], 2.25);
}
