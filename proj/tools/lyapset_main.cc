// lyapset: stability analysis of compact sets under ODE flows.
//
//   lyapset analyze problem.json [--out-dir DIR] [--epsilons=0.1,0.5]
//   lyapset plot problem.report.json [--axes=i,j] [-o out.svg]
//   lyapset selftest [--filter=flow]

#include <iostream>

#include "CLI11.hpp"
#include "lyapset/cli.h"

int main(int argc, char** argv) {
  CLI::App app{"Numerical evidence for Lyapunov stability of compact sets", "lyapset"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lyapset::kToolVersion));

  lyapset::AnalyzeArgs analyze;
  std::vector<double> epsilons;
  auto* cmd_analyze = app.add_subcommand("analyze", "Run every analysis block of a problem file");
  cmd_analyze->add_option("file", analyze.problem_path, "Problem definition (JSON)")->required();
  cmd_analyze->add_option("--out-dir", analyze.out_dir,
                          "Directory for report, CSV and SVG output (default: next to the file)");
  auto* eps_opt = cmd_analyze->add_option("--epsilons", epsilons,
                                          "Override the stability block's epsilon list")
                      ->delimiter(',');

  lyapset::PlotArgs plot;
  std::string axes;
  auto* cmd_plot = app.add_subcommand("plot", "Render a report as an SVG phase portrait");
  cmd_plot->add_option("report", plot.report_path, "Report written by analyze")->required();
  cmd_plot->add_option("--axes", axes, "Coordinates to draw, 1-based, e.g. 1,3");
  cmd_plot->add_option("-o,--output", plot.out_path, "Output SVG path");

  std::string filter;
  auto* cmd_selftest = app.add_subcommand("selftest", "Run the closed-form self checks");
  cmd_selftest->add_option("--filter", filter,
                           "Only run one module: geometry, expr, flow, limits, stability, "
                           "lyapunov or cli");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lyapset::kExitInputError;
  }

  if (*cmd_analyze) {
    if (eps_opt->count() > 0) analyze.epsilons = epsilons;
    return lyapset::CmdAnalyze(analyze, std::cout, std::cerr);
  }
  if (*cmd_plot) {
    if (!axes.empty()) {
      try {
        plot.axes = lyapset::ParseAxes(axes);
      } catch (const lyapset::PlotError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lyapset::kExitInputError;
      }
    }
    return lyapset::CmdPlot(plot, std::cout, std::cerr);
  }
  return lyapset::CmdSelftest(filter, std::cout, std::cerr);
}
