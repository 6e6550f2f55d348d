#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lyapset/problem.h"

namespace lyapset {

inline constexpr const char* kToolName = "lyapset";
inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitRejected = 2;

struct AnalysisOutput {
  nlohmann::json report;
  /// (block name, CSV contents) in block order.
  std::vector<std::pair<std::string, std::string>> tables;
  /// kExitOk, or kExitRejected for a rejected certificate or an
  /// unstable_witness stability verdict.
  int exit_code = kExitOk;
};

/// Runs every block present in `problem`. Reports contain no timestamps or
/// host data, so identical problems give identical bytes.
AnalysisOutput RunAnalysis(const ProblemDefinition& problem);

struct AnalyzeArgs {
  std::string problem_path;
  /// Defaults to the directory of the problem file.
  std::string out_dir;
  /// Replaces the stability block's epsilons (and creates the block).
  std::optional<std::vector<double>> epsilons;
};

/// Writes <stem>.report.json, <stem>.<block>.csv and, for n <= 2,
/// <stem>.svg. Returns the exit code.
int CmdAnalyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 1-based coordinate indices drawn on the horizontal and vertical axes.
using PlotAxes = std::pair<int, int>;

/// Deterministic SVG of a report. Problems with n > 2 need `axes`.
std::string RenderSvg(const nlohmann::json& report,
                      const std::optional<PlotAxes>& axes = std::nullopt);

struct PlotArgs {
  std::string report_path;
  /// Defaults to <report stem>.svg next to the report.
  std::string out_path;
  std::optional<PlotAxes> axes;
};

int CmdPlot(const PlotArgs& args, std::ostream& out, std::ostream& err);

/// Parses "i,j" into 1-based axes.
PlotAxes ParseAxes(const std::string& text);

struct SelftestCheck {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the closed-form checks whose module matches `filter` (empty: all).
/// Tolerances are multiplied by `tol_scale`.
std::vector<SelftestCheck> RunSelftest(const std::string& filter, double tol_scale);

/// Reads LYAPSET_TOL_SCALE, prints one line per check; 0 iff all pass.
int CmdSelftest(const std::string& filter, std::ostream& out, std::ostream& err);

}  // namespace lyapset
