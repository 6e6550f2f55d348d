#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lyapset/cli.h"
#include "lyapset/limits.h"
#include "lyapset/lyapunov.h"
#include "lyapset/stability.h"

namespace lyapset {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Round-trippable and locale independent.
std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinity; callers that can produce one also emit a flag.
json Finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json Optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json PointsJson(const std::vector<StatePoint>& points) {
  json out = json::array();
  for (const auto& p : points) out.push_back(ToVector(p));
  return out;
}

json BoxJson(const Box& box) { return {{"lo", ToVector(box.lo)}, {"hi", ToVector(box.hi)}}; }

// "x1,...,xn" followed by `suffix` and a newline.
std::string Header(int n, const std::string& suffix) {
  std::string h;
  for (int i = 1; i <= n; ++i) h += (i == 1 ? "x" : ",x") + std::to_string(i);
  return h + suffix + "\n";
}

void AppendPoint(std::string& line, const StatePoint& p) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!line.empty()) line += ',';
    line += Num(p[i]);
  }
}

json SetJson(const CompactSet& set) {
  return std::visit(
      [&](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        json j = {{"type", set.type_name()}};
        if constexpr (std::is_same_v<T, SinglePoint>) {
          j["coords"] = ToVector(s.point);
        } else if constexpr (std::is_same_v<T, PointCloud>) {
          j["points"] = PointsJson(s.points);
        } else if constexpr (std::is_same_v<T, ClosedBall>) {
          j["center"] = ToVector(s.center);
          j["radius"] = s.radius;
        } else {
          j["lo"] = ToVector(s.lo);
          j["hi"] = ToVector(s.hi);
        }
        return j;
      },
      set.shape());
}

json WitnessJson(const Witness& w, double replay) {
  return {{"point", ToVector(w.point)},
          {"candidate_delta", w.candidate_delta},
          {"exit_time", w.exit_time},
          {"exit_distance", Finite(w.exit_distance)},
          {"escaped", w.escaped},
          {"replay_max_distance", Finite(replay)}};
}

struct BlockResult {
  json summary;
  std::string csv;
  bool rejected = false;
};

BlockResult RunOmega(const ProblemDefinition& p, const VectorField& field) {
  const OmegaBlock& b = *p.omega;
  BlockResult r;
  r.summary = {{"x0", b.x0}};
  try {
    const OmegaEstimate est = EstimateOmega(field, ToPoint(b.x0), p.integrator, b.options);
    r.summary["representatives"] = est.points.points.size();
    r.summary["window_samples"] = est.window_samples;
    r.summary["invariance_defect"] = est.invariance_defect;
    r.summary["probe_time"] = est.probe_time;
    r.summary["points"] = PointsJson(est.points.points);
    r.csv = Header(p.dimension, "");
    for (const auto& q : est.points.points) {
      std::string line;
      AppendPoint(line, q);
      r.csv += line + "\n";
    }
  } catch (const OrbitUnboundedError& err) {
    r.summary["error"] = err.what();
  }
  return r;
}

BlockResult RunStability(const ProblemDefinition& p, const VectorField& field,
                         const CompactSet& set) {
  const StabilityBlock& b = *p.stability;
  StabilityOptions opts;
  opts.epsilons = b.epsilons;
  opts.delta = {b.horizon, b.shell_samples, b.out_dt, DeriveSeed(p.seed, "stability")};
  opts.invariance_samples = b.invariance_samples;
  opts.invariance_horizon = b.invariance_horizon;
  if (b.box) opts.roa_box = CompactSet::MakeBox(ToPoint(b.box->first), ToPoint(b.box->second));
  opts.roa_resolution = b.resolution;
  opts.roa_horizon = b.roa_horizon;
  opts.roa_tol = b.tol;

  const StabilityReport rep = ClassifyStability(field, set, p.integrator, opts);
  BlockResult r;
  json pairs = json::array();
  r.csv = "epsilon,delta,samples_per_candidate";
  for (int i = 1; i <= p.dimension; ++i) r.csv += ",witness_x" + std::to_string(i);
  r.csv += ",exit_time,exit_distance,escaped\n";
  for (const DeltaResult& d : rep.pairs) {
    json pj = {{"epsilon", d.epsilon},
               {"delta", Optional(d.delta)},
               {"samples_per_candidate", d.samples_per_candidate},
               {"seed", d.seed},
               {"witness", nullptr}};
    std::string line = Num(d.epsilon) + "," + (d.delta ? Num(*d.delta) : "") + "," +
                       std::to_string(d.samples_per_candidate);
    if (d.witness) {
      const double replay =
          ReplayWitness(field, set, *d.witness, b.horizon, b.out_dt, p.integrator);
      pj["witness"] = WitnessJson(*d.witness, replay);
      std::string coords;
      AppendPoint(coords, d.witness->point);
      line += "," + coords + "," + Num(d.witness->exit_time) + "," +
              Num(d.witness->exit_distance) + "," + (d.witness->escaped ? "1" : "0");
    } else {
      line += std::string(p.dimension + 3, ',');
    }
    pairs.push_back(pj);
    r.csv += line + "\n";
  }

  std::vector<std::string> labels;
  for (const auto& v : rep.grid.verdicts) labels.push_back(ToString(v.label));
  r.summary = {
      {"pairs", pairs},
      {"invariance",
       {{"max_excursion", Finite(rep.invariance.max_excursion)},
        {"escaped", rep.invariance.escaped},
        {"samples", rep.invariance.samples}}},
      {"uniform_T", Optional(rep.uniform_T)},
      {"grid",
       {{"box", BoxJson(rep.grid.box)},
        {"resolution", rep.grid.resolution},
        {"nodes", rep.grid_nodes},
        {"attracted", rep.grid_attracted},
        {"labels", labels}}},
      {"verdict", ToString(rep.verdict)},
      {"note", rep.note},
      {"seed", opts.delta.seed},
      {"bisection_steps", kDeltaBisectionSteps}};
  r.rejected = rep.verdict == StabilityVerdict::kUnstableWitness;
  return r;
}

BlockResult RunRoa(const ProblemDefinition& p, const VectorField& field,
                   const CompactSet& set) {
  const RoaBlock& b = *p.roa;
  const RoaGrid grid =
      ComputeRoaGrid(field, set, CompactSet::MakeBox(ToPoint(b.lo), ToPoint(b.hi)),
                     b.resolution, p.integrator, b.horizon, b.tol, b.out_dt);
  BlockResult r;
  r.csv = Header(p.dimension, ",label,final_distance,min_distance,escaped,error");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const AttractionVerdict& v = grid.verdicts[i];
    labels.push_back(ToString(v.label));
    std::string line;
    AppendPoint(line, grid.nodes[i]);
    std::string error = v.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    line += std::string(",") + ToString(v.label) + "," + Num(v.final_distance) + "," +
            Num(v.min_distance) + "," + (v.escaped ? "1" : "0") + "," + error;
    r.csv += line + "\n";
  }
  r.summary = {{"box", BoxJson(grid.box)},
               {"resolution", grid.resolution},
               {"horizon", b.horizon},
               {"tol", b.tol},
               {"nodes", grid.nodes.size()},
               {"counts",
                {{"attracted", grid.Count(AttractionLabel::kAttracted)},
                 {"weakly_attracted", grid.Count(AttractionLabel::kWeaklyAttracted)},
                 {"not_attracted_within_horizon",
                  grid.Count(AttractionLabel::kNotAttractedWithinHorizon)}}},
               {"errors", grid.errors()},
               {"labels", labels}};
  return r;
}

BlockResult RunConverse(const ProblemDefinition& p, const VectorField& field,
                        const CompactSet& set) {
  const ConverseBlock& b = *p.converse;
  CompactSet box = [&] {
    if (b.box) return CompactSet::MakeBox(ToPoint(b.box->first), ToPoint(b.box->second));
    const Box bb = set.BoundingBox();
    const StatePoint one = StatePoint::Ones(p.dimension);
    return CompactSet::MakeBox(bb.lo - one, bb.hi + one);
  }();
  ConversePropertyOptions opts;
  opts.tol = b.tol;
  const std::uint64_t seed = DeriveSeed(p.seed, "converse");
  const ConversePropertyReport rep =
      VerifyConverseProperties(field, set, box, b.samples, seed, p.integrator, b.config, opts);

  BlockResult r;
  r.csv = "sample," + Header(p.dimension, ",distance,ell,big_l,tail_settled");
  json rows = json::array();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const ConverseRow& row = rep.rows[i];
    std::string line = std::to_string(i);
    AppendPoint(line, row.x);
    line += "," + Num(row.distance) + "," + Num(row.ell) + "," + Num(row.big_l) + "," +
            (row.tail_settled ? "1" : "0");
    r.csv += line + "\n";
    rows.push_back({{"x", ToVector(row.x)},
                    {"distance", row.distance},
                    {"ell", Finite(row.ell)},
                    {"big_l", Finite(row.big_l)},
                    {"tail_settled", row.tail_settled}});
  }
  json violations = json::array();
  for (const ConverseViolation& v : rep.violations) {
    violations.push_back({{"kind", ToString(v.kind)},
                          {"sample", v.sample},
                          {"point", ToVector(v.point)},
                          {"probe_time", v.probe_time},
                          {"lhs", Finite(v.lhs)},
                          {"rhs", Finite(v.rhs)},
                          {"message", v.message}});
  }
  r.summary = {{"box", BoxJson(box.BoundingBox())},
               {"samples", rep.samples},
               {"seed", rep.seed},
               {"tol", b.tol},
               {"monotonicity_checks", rep.monotonicity_checks},
               {"decrease_checks", rep.decrease_checks},
               {"decrease_exempt", rep.decrease_exempt},
               {"monotonicity_violations", rep.monotonicity_violations},
               {"decrease_violations", rep.decrease_violations},
               {"continuity_violations", rep.continuity_violations},
               {"evaluation_failures", rep.evaluation_failures},
               {"max_continuity_jump", rep.max_continuity_jump},
               {"max_truncation_bound", rep.max_truncation_bound},
               {"violations", violations},
               {"rows", rows}};
  return r;
}

BlockResult RunCertificate(const ProblemDefinition& p, const VectorField& field,
                           const CompactSet& set) {
  const CertificateBlock& b = *p.certificate;
  CertificateOptions opts;
  opts.tol = b.tol;
  opts.probe_time = b.probe_time;
  const ScalarField candidate = ScalarField::Parse(b.candidate, p.dimension);
  const CertificateReport rep =
      VerifyCertificate(field, set, candidate, b.r_in, b.r_out, b.samples,
                        DeriveSeed(p.seed, "certificate"), p.integrator, opts);

  BlockResult r;
  r.csv = "sample," + Header(p.dimension, ",distance,L,lie_derivative,decrease");
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const CertificateSample& s = rep.rows[i];
    std::string line = std::to_string(i);
    AppendPoint(line, s.x);
    line += "," + Num(s.distance) + "," + Num(s.value) + "," + Num(s.lie_derivative) + "," +
            (std::isnan(s.decrease) ? std::string() : Num(s.decrease));
    r.csv += line + "\n";
  }
  r.summary = {{"L", b.candidate},
               {"verdict", ToString(rep.verdict)},
               {"positivity_margin", Finite(rep.positivity_margin)},
               {"zero_on_M_max", Finite(rep.zero_on_M_max)},
               {"gradient_margin", Finite(rep.gradient_margin)},
               {"trajectory_decrease_margin", Finite(rep.trajectory_decrease_margin)},
               {"samples", rep.samples},
               {"seed", rep.seed},
               {"r_in", rep.r_in},
               {"r_out", rep.r_out},
               {"tol", rep.tol},
               {"used_finite_differences", rep.used_finite_differences},
               {"decrease_exempt", rep.decrease_exempt},
               {"diagnostic", rep.diagnostic}};
  r.rejected = rep.verdict == CertificateVerdict::kRejected;
  return r;
}

BlockResult RunTrajectories(const ProblemDefinition& p, const VectorField& field) {
  const TrajectoriesBlock& b = *p.trajectories;
  BlockResult r;
  r.csv = "trajectory,t," + Header(p.dimension, "");
  json list = json::array();
  for (std::size_t k = 0; k < b.initial.size(); ++k) {
    std::vector<double> times;
    std::vector<StatePoint> states;
    std::string error;
    try {
      IntegrateSampled(field, ToPoint(b.initial[k]), b.horizon, b.out_dt, p.integrator,
                       [&](double t, const StatePoint& s) {
                         times.push_back(t);
                         states.push_back(s);
                         return true;
                       });
    } catch (const FlowError& err) {
      error = err.what();
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::string line = std::to_string(k) + "," + Num(times[i]);
      AppendPoint(line, states[i]);
      r.csv += line + "\n";
    }
    list.push_back({{"x0", b.initial[k]},
                    {"times", times},
                    {"states", PointsJson(states)},
                    {"error", error}});
  }
  r.summary = {{"horizon", b.horizon}, {"out_dt", b.out_dt}, {"orbits", list}};
  return r;
}

void WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

AnalysisOutput RunAnalysis(const ProblemDefinition& p) {
  const VectorField field = VectorField::Parse(p.field);
  const CompactSet set = ResolveSet(p);

  AnalysisOutput out;
  json& rep = out.report;
  rep["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  rep["problem"] = ToJson(p);
  rep["seed"] = p.seed;
  rep["field_id"] = field.id();
  rep["set"] = SetJson(set);

  json blocks = json::object();
  bool rejected = false;
  auto record = [&](const char* name, BlockResult r) {
    blocks[name] = std::move(r.summary);
    if (!r.csv.empty()) out.tables.emplace_back(name, std::move(r.csv));
    rejected = rejected || r.rejected;
  };
  // Fixed block order keeps CSV emission and log output stable.
  if (p.omega) record("omega", RunOmega(p, field));
  if (p.stability) record("stability", RunStability(p, field, set));
  if (p.roa) record("roa", RunRoa(p, field, set));
  if (p.converse) record("converse", RunConverse(p, field, set));
  if (p.certificate) record("certificate", RunCertificate(p, field, set));
  if (p.trajectories) record("trajectories", RunTrajectories(p, field));
  rep["blocks"] = std::move(blocks);

  out.exit_code = rejected ? kExitRejected : kExitOk;
  rep["exit_code"] = out.exit_code;
  return out;
}

int CmdAnalyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  ProblemDefinition problem;
  try {
    problem = LoadProblem(args.problem_path);
    if (args.epsilons) {
      if (args.epsilons->empty()) throw ProblemError("/stability/epsilons", "expected a nonempty list");
      for (double e : *args.epsilons) {
        if (!(e > 0.0) || !std::isfinite(e)) {
          throw ProblemError("/stability/epsilons", "epsilons must be positive");
        }
      }
      if (!problem.stability) problem.stability.emplace();
      problem.stability->epsilons = *args.epsilons;
    }
  } catch (const ProblemError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  AnalysisOutput result;
  try {
    result = RunAnalysis(problem);
  } catch (const std::exception& e) {
    // Anything escaping the blocks is a problem the input should not have
    // posed (an unbounded ω-limit set for M, an unevaluable field, ...).
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  const fs::path problem_path(args.problem_path);
  const fs::path dir = args.out_dir.empty() ? problem_path.parent_path() : fs::path(args.out_dir);
  const std::string stem = problem_path.stem().string();
  try {
    if (!dir.empty()) fs::create_directories(dir);
    const fs::path report_path = dir / (stem + ".report.json");
    WriteFile(report_path, result.report.dump(2) + "\n");
    out << "wrote " << report_path.string() << "\n";
    for (const auto& [block, csv] : result.tables) {
      const fs::path csv_path = dir / (stem + "." + block + ".csv");
      WriteFile(csv_path, csv);
      out << "wrote " << csv_path.string() << "\n";
    }
    if (problem.dimension <= 2) {
      const fs::path svg_path = dir / (stem + ".svg");
      WriteFile(svg_path, RenderSvg(result.report));
      out << "wrote " << svg_path.string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  const json& blocks = result.report["blocks"];
  if (blocks.contains("stability")) {
    out << "stability: " << blocks["stability"]["verdict"].get<std::string>() << "\n";
  }
  if (blocks.contains("certificate")) {
    out << "certificate: " << blocks["certificate"]["verdict"].get<std::string>() << "\n";
  }
  return result.exit_code;
}

}  // namespace lyapset
