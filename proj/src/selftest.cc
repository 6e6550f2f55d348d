#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <ostream>

#include "lyapset/cli.h"
#include "lyapset/limits.h"
#include "lyapset/lyapunov.h"
#include "lyapset/stability.h"

namespace lyapset {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Check {
  const char* module;
  const char* name;
  std::function<Outcome(double scale)> run;
};

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// |error| <= tol, reported with both numbers.
Outcome Within(double error, double tol) {
  return {std::fabs(error) <= tol, "error " + Fmt(std::fabs(error)) + " <= " + Fmt(tol)};
}

Outcome Holds(bool ok, std::string detail) { return {ok, std::move(detail)}; }

StatePoint P(std::initializer_list<double> v) {
  StatePoint p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

IntegratorConfig Tight() {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  return cfg;
}

const VectorField& Sink() {
  static const VectorField f = VectorField::Parse({"-x1", "-x2"});
  return f;
}
const VectorField& Oscillator() {
  static const VectorField f = VectorField::Parse({"x2", "-x1"});
  return f;
}

std::vector<StatePoint> Circle(int count, double phase) {
  std::vector<StatePoint> pts;
  for (int k = 0; k < count; ++k) {
    const double a = 2 * std::numbers::pi * k / count + phase;
    pts.push_back(P({std::cos(a), std::sin(a)}));
  }
  return pts;
}

std::vector<Check> Registry() {
  const CompactSet origin = CompactSet::Point(P({0, 0}));
  std::vector<Check> checks;

  // geometry
  checks.push_back({"geometry", "distance_point_3_4_5", [=](double s) {
                      return Within(origin.DistanceTo(P({3, 4})) - 5.0, 1e-14 * s);
                    }});
  checks.push_back({"geometry", "distance_ball_exterior", [](double s) {
                      const auto ball = CompactSet::Ball(P({0, 0}), 1.0);
                      return Within(ball.DistanceTo(P({2, 0})) - 1.0, 1e-14 * s);
                    }});
  checks.push_back({"geometry", "distance_box_corner", [](double s) {
                      const auto box = CompactSet::MakeBox(P({-1, -1}), P({1, 1}));
                      return Within(box.DistanceTo(P({2, 3})) - std::sqrt(5.0), 1e-14 * s);
                    }});
  checks.push_back({"geometry", "shell_of_ball_radius", [](double s) {
                      const auto ball = CompactSet::Ball(P({0, 0}), 1.0);
                      double worst = 0;
                      for (const auto& p : SampleShell(ball, 0.5, 8, 1).points) {
                        worst = std::max(worst, std::fabs(p.norm() - 1.5));
                      }
                      return Within(worst, 1e-9 * s);
                    }});
  checks.push_back({"geometry", "hausdorff_rotated_circle", [](double s) {
                      // Rotation by half the sample spacing: every point sits
                      // midway between two neighbours, 2·sin(π/400) away.
                      const FiniteSetApprox a{Circle(200, 0), ""};
                      const FiniteSetApprox b{Circle(200, std::numbers::pi / 200), ""};
                      const double expected = 2 * std::sin(std::numbers::pi / 400);
                      return Within(Hausdorff(a, b) - expected, 1e-14 * s);
                    }});

  // expr
  checks.push_back({"expr", "evaluate_sum_of_squares", [](double s) {
                      const ScalarField f = ScalarField::Parse("x1*x1 + x2*x2", 2);
                      return Within(f.Evaluate(P({3, 4})) - 25.0, 1e-14 * s);
                    }});
  checks.push_back({"expr", "gradient_exp_cos", [](double s) {
                      const ScalarField f = ScalarField::Parse("exp(x1)*cos(x2)", 2);
                      const StatePoint x = P({0.3, -1.1});
                      const StatePoint g = f.Gradient(x);
                      const StatePoint exact = P({std::exp(0.3) * std::cos(-1.1),
                                                  -std::exp(0.3) * std::sin(-1.1)});
                      return Within((g - exact).norm(), 1e-14 * s);
                    }});
  checks.push_back({"expr", "gradient_matches_finite_differences", [](double s) {
                      const ScalarField f =
                          ScalarField::Parse("sin(x1*x2) + x1^3 - tanh(x2)/(1 + x1^2)", 2);
                      const StatePoint x = P({0.7, -0.4});
                      const StatePoint g = f.Gradient(x);
                      const double rel =
                          (g - f.FiniteDifferenceGradient(x)).norm() / g.norm();
                      return Within(rel, 1e-6 * s);
                    }});
  checks.push_back({"expr", "print_parse_round_trip", [](double s) {
                      const Expr e = Parse("-x1^2 + 3/(x2 - 0.5) * max(x1, x2, -1)", 2);
                      const Expr back = Parse(e.ToString(), 2);
                      const StatePoint x = P({1.25, -2.0});
                      return Within(e.Evaluate(x) - back.Evaluate(x), 1e-15 * s);
                    }});

  // flow
  checks.push_back({"flow", "identity_at_zero_is_bitwise", [](double) {
                      const StatePoint x = P({0.1, -3.7});
                      const StatePoint y = Flow(Oscillator(), x, 0.0, {});
                      return Holds(y == x, "flow(x, 0) == x");
                    }});
  checks.push_back({"flow", "linear_decay_exp_minus_one", [](double s) {
                      const VectorField f = VectorField::Parse({"-x1"});
                      const double y = Flow(f, P({1}), 1.0, {})[0];
                      return Within(y - std::exp(-1.0), 1e-8 * s);
                    }});
  checks.push_back({"flow", "oscillator_quarter_turn", [](double s) {
                      const StatePoint y =
                          Flow(Oscillator(), P({1, 0}), std::numbers::pi / 2, {});
                      return Within((y - P({0, -1})).norm(), 1e-8 * s);
                    }});
  checks.push_back({"flow", "rotation_back_and_forth", [](double s) {
                      return Within(SemigroupDefect(Oscillator(), P({2, 0}), 1.0, -1.0, Tight()),
                                    1e-8 * s);
                    }});
  checks.push_back({"flow", "rk4_fixed_step_decay", [](double s) {
                      IntegratorConfig cfg;
                      cfg.method = IntegratorMethod::kRk4Fixed;
                      cfg.dt = 1e-3;
                      const VectorField f = VectorField::Parse({"-x1"});
                      return Within(Flow(f, P({1}), 2.0, cfg)[0] - std::exp(-2.0), 1e-12 * s);
                    }});

  // limits
  checks.push_back({"limits", "sink_omega_is_origin", [](double s) {
                      OmegaOptions o;
                      o.transient_T = 20;
                      o.cluster_tol = 1e-4;
                      const OmegaEstimate est = EstimateOmega(Sink(), P({1, 1}), {}, o);
                      double worst = 0;
                      for (const auto& p : est.points.points) worst = std::max(worst, p.norm());
                      return Holds(est.points.points.size() == 1 && worst <= 1e-6 * s,
                                   std::to_string(est.points.points.size()) +
                                       " representative(s), max |p| " + Fmt(worst));
                    }});
  checks.push_back({"limits", "oscillator_omega_on_circle", [](double s) {
                      const OmegaEstimate est = EstimateOmega(Oscillator(), P({1, 0}), {});
                      double worst = 0;
                      for (const auto& p : est.points.points) {
                        worst = std::max(worst, std::fabs(p.norm() - 1.0));
                      }
                      return Within(worst, 1e-6 * s);
                    }});
  checks.push_back({"limits", "attraction_labels_oscillator", [](double) {
                      const auto a = ClassifyAttraction(Sink(), P({2, 2}),
                                                        CompactSet::Point(P({0, 0})), {}, 30, 1e-4);
                      const auto b = ClassifyAttraction(
                          Oscillator(), P({2, 0}), CompactSet::Cloud(Circle(720, 0)), {}, 50, 1e-3);
                      const auto c = ClassifyAttraction(Oscillator(), P({1, 0}),
                                                        CompactSet::Point(P({1, 0})), {}, 50, 1e-3);
                      const bool ok = a.label == AttractionLabel::kAttracted &&
                                      b.label == AttractionLabel::kNotAttractedWithinHorizon &&
                                      c.label == AttractionLabel::kWeaklyAttracted;
                      return Holds(ok, std::string(ToString(a.label)) + " / " +
                                           ToString(b.label) + " / " + ToString(c.label));
                    }});
  checks.push_back({"limits", "pitchfork_phase_line", [](double) {
                      const VectorField f = VectorField::Parse({"x1 - x1^3"});
                      const auto M = CompactSet::Cloud({P({-1}), P({1})});
                      const RoaGrid g = ComputeRoaGrid(
                          f, M, CompactSet::MakeBox(P({-2}), P({2})), {41}, {}, 40, 1e-3);
                      const bool ok = g.Count(AttractionLabel::kAttracted) == 40 &&
                                      g.verdicts[20].label != AttractionLabel::kAttracted;
                      return Holds(ok, std::to_string(g.Count(AttractionLabel::kAttracted)) +
                                           "/41 attracted, x=0 " + ToString(g.verdicts[20].label));
                    }});

  // stability
  checks.push_back({"stability", "sink_delta_near_epsilon", [=](double s) {
                      const DeltaResult r = EstimateDelta(Sink(), origin, 0.5, {});
                      const double floor = 0.5 * (1.0 - 0.1 * s);
                      const double d = r.delta.value_or(0.0);
                      return Holds(d >= floor, "delta " + Fmt(d) + " >= " + Fmt(floor));
                    }});
  checks.push_back({"stability", "unstable_witness_replays", [](double) {
                      const VectorField f = VectorField::Parse({"x1"});
                      const auto M = CompactSet::Point(P({0}));
                      DeltaSearchOptions o;
                      o.horizon_T = 20;
                      const DeltaResult r = EstimateDelta(f, M, 0.1, {}, o);
                      if (r.delta || !r.witness) return Holds(false, "expected no delta and a witness");
                      const double replay = ReplayWitness(f, M, *r.witness, o.horizon_T, o.out_dt, {});
                      return Holds(replay >= 0.1, "replayed excursion " + Fmt(replay));
                    }});
  checks.push_back({"stability", "uniform_time_ln20", [=](double s) {
                      const VectorField f = VectorField::Parse({"-x1"});
                      const FiniteSetApprox K{{P({-2}), P({-1}), P({1}), P({2})}, ""};
                      const auto r = UniformAttractionTime(f, K, CompactSet::Point(P({0})), 0.1,
                                                           {}, 10.0);
                      if (!r.time) return Holds(false, "no uniform time found");
                      return Within(*r.time - std::log(20.0), 0.1 * s);
                    }});

  // lyapunov
  checks.push_back({"lyapunov", "ell_of_sink_is_norm", [=](double s) {
                      const EllEstimate e = Ell(Sink(), origin, P({1.5, 0}), {}, {});
                      return Within(e.value - 1.5, 1e-9 * s);
                    }});
  checks.push_back({"lyapunov", "big_l_of_sink_is_half_norm", [=](double s) {
                      const BigLEstimate l = BigL(Sink(), origin, P({0.6, -0.8}), {}, {});
                      return Within(l.value - 0.5, 1e-3 * s);
                    }});
  checks.push_back({"lyapunov", "simpson_exp_integral", [](double s) {
                      std::vector<double> v;
                      for (int k = 0; k <= 100; ++k) v.push_back(std::exp(-0.01 * k));
                      const double q = Integrate(v, 0.01, Quadrature::kSimpson);
                      return Within(q - (1.0 - std::exp(-1.0)), 1e-9 * s);
                    }});
  checks.push_back({"lyapunov", "certificate_accepts_sink", [=](double) {
                      const auto r = VerifyCertificate(Sink(), origin,
                                                       ScalarField::Parse("x1^2+x2^2", 2), 0, 2,
                                                       200, 1, {});
                      return Holds(r.verdict == CertificateVerdict::kAccepted &&
                                       r.gradient_margin < 0,
                                   std::string(ToString(r.verdict)) + ", gradient margin " +
                                       Fmt(r.gradient_margin));
                    }});
  checks.push_back({"lyapunov", "certificate_rejects_source", [](double) {
                      const auto r = VerifyCertificate(VectorField::Parse({"x1"}),
                                                       CompactSet::Point(P({0})),
                                                       ScalarField::Parse("x1^2", 1), 0, 2, 200,
                                                       1, {});
                      return Holds(r.verdict == CertificateVerdict::kRejected &&
                                       r.gradient_margin > 0,
                                   std::string(ToString(r.verdict)) + ", gradient margin " +
                                       Fmt(r.gradient_margin));
                    }});

  // cli
  checks.push_back({"cli", "problem_round_trip", [](double) {
                      const auto doc = nlohmann::json::parse(R"({
                        "dimension": 2, "field": ["x2", "-x1"],
                        "set": {"type": "point", "coords": [0, 0]},
                        "stability": {"epsilons": [0.5, 1.0], "horizon": 50},
                        "roa": {"box": [[-2, -2], [2, 2]], "resolution": 41},
                        "converse": {"lambda": 1.0, "horizon": 30},
                        "certificate": {"L": "x1^2+x2^2", "annulus": [0, 2], "samples": 500},
                        "seed": 42})");
                      const auto once = ToJson(ParseProblem(doc));
                      const auto twice = ToJson(ParseProblem(once));
                      return Holds(once == twice, "serialize(parse(serialize(p))) == serialize(p)");
                    }});
  checks.push_back({"cli", "derived_seeds_are_distinct", [](double) {
                      const bool ok = DeriveSeed(42, "stability") != DeriveSeed(42, "converse") &&
                                      DeriveSeed(42, "stability") == DeriveSeed(42, "stability");
                      return Holds(ok, "per-block seeds differ and are stable");
                    }});
  return checks;
}

}  // namespace

std::vector<SelftestCheck> RunSelftest(const std::string& filter, double tol_scale) {
  std::vector<SelftestCheck> results;
  for (const Check& c : Registry()) {
    if (!filter.empty() && filter != c.module) continue;
    SelftestCheck r{c.module, c.name, false, ""};
    try {
      const Outcome o = c.run(tol_scale);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

int CmdSelftest(const std::string& filter, std::ostream& out, std::ostream& err) {
  double scale = 1.0;
  if (const char* env = std::getenv("LYAPSET_TOL_SCALE")) {
    char* end = nullptr;
    scale = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(scale > 0.0) || !std::isfinite(scale)) {
      err << "error: LYAPSET_TOL_SCALE must be a positive number, got '" << env << "'\n";
      return kExitInputError;
    }
  }
  const std::vector<SelftestCheck> results = RunSelftest(filter, scale);
  if (results.empty()) {
    err << "error: no checks match filter '" << filter << "'\n";
    return kExitInputError;
  }
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.module << "." << r.name << "  " << r.detail
        << "\n";
    failed += r.passed ? 0 : 1;
  }
  out << results.size() - failed << "/" << results.size() << " checks passed";
  if (scale != 1.0) out << " (tolerance scale " << Fmt(scale) << ")";
  out << "\n";
  return failed == 0 ? kExitOk : kExitInputError;
}

}  // namespace lyapset
