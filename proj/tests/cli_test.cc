#include "lyapset/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace lyapset {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const json kSink = json::parse(R"({
  "dimension": 2,
  "field": ["-x1", "-x2"],
  "set": {"type": "point", "coords": [0, 0]},
  "stability": {"epsilons": [0.5], "horizon": 10},
  "roa": {"box": [[-1, -1], [1, 1]], "resolution": 5, "horizon": 20},
  "certificate": {"L": "x1^2+x2^2", "annulus": [0, 1], "samples": 50},
  "trajectories": {"initial": [[1, 0.5]], "horizon": 5},
  "seed": 1
})");

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory per test, removed afterwards.
class Scratch {
 public:
  Scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("lyapset_cli_test_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  const fs::path& dir() const { return dir_; }

  fs::path Write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

 private:
  fs::path dir_;
};

std::size_t CountCells(const std::string& svg) {
  std::size_t cells = 0;
  for (std::size_t at = svg.find("class=\"roa-cell\""); at != std::string::npos;
       at = svg.find("class=\"roa-cell\"", at + 1)) {
    ++cells;
  }
  return cells;
}

std::string PointerOf(const json& doc) {
  try {
    ParseProblem(doc);
  } catch (const ProblemError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

GTEST_TEST(ProblemTest, SchemaErrorsCarryPointers) {
  json bad = kSink;
  bad["stability"]["epsilons"][0] = -1;
  EXPECT_EQ(PointerOf(bad), "/stability/epsilons/0");

  bad = kSink;
  bad["field"] = {"-x1"};
  EXPECT_EQ(PointerOf(bad), "/field");

  bad = kSink;
  bad["field"][1] = "x3";
  EXPECT_EQ(PointerOf(bad), "/field/1");

  bad = kSink;
  bad["roa"]["colour"] = "red";
  EXPECT_EQ(PointerOf(bad), "/roa/colour");

  bad = kSink;
  bad["set"]["coords"] = {0};
  EXPECT_EQ(PointerOf(bad), "/set/coords");

  bad = kSink;
  bad["certificate"]["annulus"] = {1, 0.5};
  EXPECT_EQ(PointerOf(bad), "/certificate/annulus/1");

  bad = kSink;
  bad.erase("dimension");
  EXPECT_NE(PointerOf(bad), "<accepted>");
  EXPECT_EQ(PointerOf(kSink), "<accepted>");
}

GTEST_TEST(ProblemTest, CanonicalFormRoundTrips) {
  const ProblemDefinition p = ParseProblem(kSink);
  const json once = ToJson(p);
  EXPECT_EQ(ToJson(ParseProblem(once)), once);
  EXPECT_EQ(once["seed"], 1);
  EXPECT_EQ(once["stability"]["shell_samples"], 16);
}

GTEST_TEST(ProblemTest, BundledProblemsRoundTrip) {
  for (const auto& entry : fs::directory_iterator(LYAPSET_PROBLEMS_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const json once = ToJson(LoadProblem(entry.path().string()));
    EXPECT_EQ(ToJson(ParseProblem(once)), once) << entry.path();
  }
}

GTEST_TEST(ProblemTest, MalformedJsonReportsByteOffset) {
  Scratch s;
  const auto path = s.Write("broken.json", "{\"dimension\": 2,, }");
  try {
    LoadProblem(path.string());
    FAIL() << "expected ProblemError";
  } catch (const ProblemError& e) {
    EXPECT_NE(std::string(e.what()).find("malformed JSON at byte 16"), std::string::npos)
        << e.what();
  }
}

GTEST_TEST(ProblemTest, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(DeriveSeed(42, "stability"), DeriveSeed(42, "stability"));
  EXPECT_NE(DeriveSeed(42, "stability"), DeriveSeed(42, "converse"));
  EXPECT_NE(DeriveSeed(42, "stability"), DeriveSeed(43, "stability"));
}

GTEST_TEST(AnalysisTest, SinkIsStableAndAccepted) {
  const AnalysisOutput out = RunAnalysis(ParseProblem(kSink));
  EXPECT_EQ(out.exit_code, kExitOk);
  const json& blocks = out.report["blocks"];
  EXPECT_EQ(blocks["stability"]["verdict"], "stable_evidence");
  EXPECT_EQ(blocks["certificate"]["verdict"], "accepted");
  EXPECT_EQ(out.report["exit_code"], kExitOk);
  EXPECT_EQ(out.report["tool"]["name"], kToolName);
  EXPECT_FALSE(out.tables.empty());
}

GTEST_TEST(AnalysisTest, UnstableFieldExitsWithRejection) {
  const AnalysisOutput out =
      RunAnalysis(LoadProblem(std::string(LYAPSET_PROBLEMS_DIR) + "/unstable.json"));
  EXPECT_EQ(out.exit_code, kExitRejected);
  EXPECT_EQ(out.report["blocks"]["stability"]["verdict"], "unstable_witness");
  EXPECT_EQ(out.report["blocks"]["certificate"]["verdict"], "rejected");
}

GTEST_TEST(AnalysisTest, IdenticalProblemsGiveIdenticalBytes) {
  const ProblemDefinition p = ParseProblem(kSink);
  const AnalysisOutput a = RunAnalysis(p);
  const AnalysisOutput b = RunAnalysis(p);
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  EXPECT_EQ(a.tables, b.tables);
  EXPECT_EQ(RenderSvg(a.report), RenderSvg(b.report));
}

GTEST_TEST(SvgTest, OneCellPerRoaNode) {
  const std::string svg = RenderSvg(RunAnalysis(ParseProblem(kSink)).report);
  const std::size_t cells = CountCells(svg);
  EXPECT_EQ(cells, 25u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

GTEST_TEST(SvgTest, OscillatorReportHasResolutionSquaredCells) {
  const ProblemDefinition p =
      LoadProblem(std::string(LYAPSET_PROBLEMS_DIR) + "/harmonic_oscillator.json");
  ASSERT_TRUE(p.roa);
  const std::string svg = RenderSvg(RunAnalysis(p).report);
  const std::size_t cells = CountCells(svg);
  const std::size_t side = static_cast<std::size_t>(p.roa->resolution.front());
  EXPECT_EQ(cells, side * side);
}

GTEST_TEST(SvgTest, HighDimensionNeedsAxes) {
  json three = {{"dimension", 3},
                {"field", {"-x1", "-x2", "-x3"}},
                {"set", {{"type", "point"}, {"coords", {0, 0, 0}}}},
                {"trajectories", {{"initial", {{1, 1, 1}}}, {"horizon", 2}}}};
  const json report = RunAnalysis(ParseProblem(three)).report;
  try {
    RenderSvg(report);
    FAIL() << "expected PlotError";
  } catch (const PlotError& e) {
    EXPECT_NE(std::string(e.what()).find("--axes"), std::string::npos);
  }
  EXPECT_NO_THROW(RenderSvg(report, PlotAxes{1, 3}));
  EXPECT_THROW(RenderSvg(report, PlotAxes{1, 4}), PlotError);
  EXPECT_EQ(ParseAxes("2,3"), (PlotAxes{2, 3}));
  EXPECT_THROW(ParseAxes("2"), std::exception);
}

GTEST_TEST(CmdTest, AnalyzeWritesReportTablesAndSvg) {
  Scratch s;
  const auto path = s.Write("sink.json", kSink.dump());
  std::ostringstream out, err;
  EXPECT_EQ(CmdAnalyze({path.string(), "", std::nullopt}, out, err), kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(s.dir() / "sink.report.json"));
  EXPECT_TRUE(fs::exists(s.dir() / "sink.svg"));
  EXPECT_TRUE(fs::exists(s.dir() / "sink.roa.csv"));
  EXPECT_TRUE(fs::exists(s.dir() / "sink.certificate.csv"));
  EXPECT_NE(out.str().find("stability: stable_evidence"), std::string::npos) << out.str();

  std::ostringstream pout, perr;
  const std::string svg_path = (s.dir() / "replot.svg").string();
  EXPECT_EQ(CmdPlot({(s.dir() / "sink.report.json").string(), svg_path, std::nullopt}, pout, perr),
            kExitOk)
      << perr.str();
  EXPECT_EQ(Slurp(svg_path), Slurp(s.dir() / "sink.svg"));
}

GTEST_TEST(CmdTest, EpsilonsFlagOverridesTheBlock) {
  Scratch s;
  const auto path = s.Write("sink.json", kSink.dump());
  std::ostringstream out, err;
  ASSERT_EQ(CmdAnalyze({path.string(), "", std::vector<double>{0.2, 0.4}}, out, err), kExitOk);
  const json report = json::parse(Slurp(s.dir() / "sink.report.json"));
  EXPECT_EQ(report["problem"]["stability"]["epsilons"], json({0.2, 0.4}));
  EXPECT_EQ(report["blocks"]["stability"]["pairs"].size(), 2u);
}

GTEST_TEST(CmdTest, InputErrorsExitWithOne) {
  Scratch s;
  std::ostringstream out, err;
  EXPECT_EQ(CmdAnalyze({(s.dir() / "missing.json").string(), "", std::nullopt}, out, err),
            kExitInputError);
  json bad = kSink;
  bad["stability"]["epsilons"] = json::array();
  const auto path = s.Write("bad.json", bad.dump());
  std::ostringstream err2;
  EXPECT_EQ(CmdAnalyze({path.string(), "", std::nullopt}, out, err2), kExitInputError);
  EXPECT_NE(err2.str().find("/stability/epsilons"), std::string::npos) << err2.str();
}

GTEST_TEST(SelftestTest, FilterSelectsOneModule) {
  const auto checks = RunSelftest("flow", 1.0);
  ASSERT_FALSE(checks.empty());
  for (const auto& c : checks) {
    EXPECT_EQ(c.module, "flow");
    EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  }
  EXPECT_TRUE(RunSelftest("no-such-module", 1.0).empty());
}

GTEST_TEST(BinaryTest, ExitCodesFromTheShell) {
  Scratch s;
  const std::string cli = LYAPSET_CLI_PATH;
  const std::string quiet = " > " + (s.dir() / "log.txt").string() + " 2>&1";
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + quiet).c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(run("--version"), 0);
  EXPECT_NE(Slurp(s.dir() / "log.txt").find(kToolVersion), std::string::npos);
  EXPECT_EQ(run("analyze " + (s.dir() / "nope.json").string()), 1);
  EXPECT_EQ(run("analyze " + std::string(LYAPSET_PROBLEMS_DIR) + "/unstable.json --out-dir " +
                s.dir().string()),
            2);
  EXPECT_TRUE(fs::exists(s.dir() / "unstable.report.json"));
  EXPECT_EQ(run("selftest --filter geometry"), 0);
}

}  // namespace
}  // namespace lyapset
