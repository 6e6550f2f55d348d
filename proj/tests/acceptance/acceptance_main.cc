// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each check records why it failed instead of stopping.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lyapset/limits.h"
#include "lyapset/lyapunov.h"
#include "lyapset/stability.h"
#include "random_expr.h"

namespace lyapset {
namespace {

namespace fs = std::filesystem;

class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void Note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }

  int checks() const { return checks_; }
  int failed() const { return failed_; }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::string& notes() const { return notes_; }

 private:
  int checks_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

StatePoint P(std::initializer_list<double> v) {
  StatePoint p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

StatePoint Uniform(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  StatePoint p(n);
  for (int i = 0; i < n; ++i) p[i] = u(rng);
  return p;
}

std::vector<StatePoint> UnitCircle(int count) {
  std::vector<StatePoint> pts;
  for (int k = 0; k < count; ++k) {
    const double a = 2 * std::numbers::pi * k / count;
    pts.push_back(P({std::cos(a), std::sin(a)}));
  }
  return pts;
}

IntegratorConfig Tol(double tol) {
  IntegratorConfig cfg;
  cfg.rel_tol = tol;
  cfg.abs_tol = tol * 1e-2;
  return cfg;
}

VectorField Sink() { return VectorField::Parse({"-x1", "-x2"}); }
VectorField Spiral() { return VectorField::Parse({"-x1 + x2", "-x1 - x2"}); }
VectorField Oscillator() { return VectorField::Parse({"x2", "-x1"}); }
VectorField VanDerPol() { return VectorField::Parse({"x2", "(1 - x1^2)*x2 - x1"}); }
const CompactSet& Origin() {
  static const CompactSet origin = CompactSet::Point(P({0, 0}));
  return origin;
}

void FlowAxioms(Checker& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  const IntegratorConfig cfg = Tol(1e-10);
  double worst = 0.0;
  for (const VectorField& field : {Sink(), Oscillator()}) {
    for (int k = 0; k < 100; ++k) {
      const StatePoint x = Uniform(rng, 2, -2, 2);
      const StatePoint y = Flow(field, x, 0.0, cfg);
      c.Expect(std::memcmp(x.data(), y.data(), 2 * sizeof(double)) == 0, "identity not bitwise");
      const double d = SemigroupDefect(field, x, time(rng), time(rng), cfg);
      worst = std::max(worst, d);
      c.Expect(d <= 1e-7, field.id() + " semigroup defect " + Fmt("%.3g", d));
    }
  }
  c.Note("worst semigroup defect " + Fmt("%.2e", worst));
}

void ClosedFormFlow(Checker& c) {
  const double a = std::fabs(Flow(VectorField::Parse({"-x1"}), P({1}), 1.0, {})[0] - std::exp(-1.0));
  const double b = (Flow(Oscillator(), P({1, 0}), std::numbers::pi / 2, {}) - P({0, -1})).norm();
  c.Expect(a <= 1e-8, "linear error " + Fmt("%.3g", a));
  c.Expect(b <= 1e-8, "oscillator error " + Fmt("%.3g", b));
  c.Note("errors " + Fmt("%.2e", a) + ", " + Fmt("%.2e", b));
}

void OmegaInvariance(Checker& c) {
  const OmegaEstimate vdp = EstimateOmega(VanDerPol(), P({0.1, 0}), {});
  c.Expect(vdp.invariance_defect <= 1e-2, "Van der Pol defect " + Fmt("%.3g", vdp.invariance_defect));

  // The circle needs a long window and tight clustering: the defect is set
  // by how densely the window samples cover the orbit.
  OmegaOptions circle;
  circle.window_T = 6000;
  circle.cluster_tol = 1e-6;
  const OmegaEstimate osc = EstimateOmega(Oscillator(), P({1, 0}), {}, circle);
  c.Expect(osc.invariance_defect <= 1e-5, "oscillator defect " + Fmt("%.3g", osc.invariance_defect));

  OmegaOptions sink_opts;
  sink_opts.cluster_tol = 1e-4;
  const OmegaEstimate sink = EstimateOmega(Sink(), P({1, 1}), {}, sink_opts);
  c.Expect(sink.points.points.size() == 1, "sink Ω has " +
                                               std::to_string(sink.points.points.size()) + " points");
  if (!sink.points.points.empty()) {
    c.Expect(sink.points.points[0].norm() <= 1e-6, "sink Ω away from origin");
  }
  c.Note("defects vdp " + Fmt("%.2e", vdp.invariance_defect) + ", oscillator " +
         Fmt("%.2e", osc.invariance_defect));
}

void AttractionLabels(Checker& c) {
  const auto a = ClassifyAttraction(Sink(), P({2, 2}), Origin(), {}, 30, 1e-4);
  const auto b = ClassifyAttraction(Oscillator(), P({2, 0}), CompactSet::Cloud(UnitCircle(720)),
                                    {}, 50, 1e-3);
  const auto w = ClassifyAttraction(Oscillator(), P({1, 0}), CompactSet::Point(P({1, 0})), {}, 50,
                                    1e-3);
  c.Expect(a.label == AttractionLabel::kAttracted, std::string("sink: ") + ToString(a.label));
  c.Expect(b.label == AttractionLabel::kNotAttractedWithinHorizon,
           std::string("ring: ") + ToString(b.label));
  c.Expect(w.label == AttractionLabel::kWeaklyAttracted, std::string("point: ") + ToString(w.label));
}

void RoaGrids(Checker& c) {
  const RoaGrid pf = ComputeRoaGrid(VectorField::Parse({"x1 - x1^3"}),
                                    CompactSet::Cloud({P({-1}), P({1})}),
                                    CompactSet::MakeBox(P({-2}), P({2})), {41}, {}, 40, 1e-3);
  const std::size_t attracted = pf.Count(AttractionLabel::kAttracted);
  c.Expect(attracted == 40, "pitchfork attracted " + std::to_string(attracted) + "/41");
  c.Expect(pf.nodes[20][0] == 0.0 && pf.verdicts[20].label != AttractionLabel::kAttracted,
           "node at 0 attracted");
  const RoaGrid sink = ComputeRoaGrid(Sink(), Origin(), CompactSet::MakeBox(P({-1, -1}), P({1, 1})),
                                      {11, 11}, {}, 30, 1e-3);
  const std::size_t all = sink.Count(AttractionLabel::kAttracted);
  c.Expect(all == 121, "sink attracted " + std::to_string(all) + "/121");
}

void EpsilonDelta(Checker& c) {
  for (const VectorField& field : {Sink(), Oscillator()}) {
    for (double eps : {0.1, 0.5, 1.0}) {
      const DeltaResult r = EstimateDelta(field, Origin(), eps, {});
      c.Expect(r.delta && *r.delta >= 0.9 * eps,
               field.id() + " eps " + Fmt("%g", eps) + " delta " + Fmt("%g", r.delta.value_or(-1)));
    }
  }
  const VectorField source = VectorField::Parse({"x1"});
  const CompactSet zero = CompactSet::Point(P({0}));
  const DeltaSearchOptions opts;
  for (double eps : {0.1, 0.5, 1.0}) {
    const DeltaResult r = EstimateDelta(source, zero, eps, {}, opts);
    c.Expect(!r.delta, "unstable field certified at eps " + Fmt("%g", eps));
    c.Expect(r.witness.has_value(), "no witness at eps " + Fmt("%g", eps));
    if (!r.witness) continue;
    const Witness& w = *r.witness;
    c.Expect(zero.DistanceTo(w.point) <= w.candidate_delta + 1e-12, "witness outside B(M, δ)");
    c.Expect(ReplayWitness(source, zero, w, opts.horizon_T, opts.out_dt, {}) >= eps,
             "witness replay stays inside B(M, ε)");
  }
}

void UniformAttraction(Checker& c) {
  const FiniteSetApprox K{{P({-2}), P({-1}), P({1}), P({2})}, ""};
  const auto r = UniformAttractionTime(VectorField::Parse({"-x1"}), K, CompactSet::Point(P({0})),
                                       0.1, {}, 10);
  const double target = std::log(20.0);
  c.Expect(r.time && std::fabs(*r.time - target) <= 0.1,
           "T = " + Fmt("%g", r.time.value_or(-1)));
  if (r.time) c.Note("T " + Fmt("%.4f", *r.time) + " vs ln 20 " + Fmt("%.4f", target));
}

void ConverseConstruction(Checker& c) {
  IntegratorConfig tight = Tol(1e-10);
  std::mt19937_64 rng(18);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const StatePoint x = Uniform(rng, 2, -2, 2);
    const double err = std::fabs(BigL(Sink(), Origin(), x, tight, {}).value - x.norm() / 2);
    worst = std::max(worst, err);
    c.Expect(err <= 1e-3, "L error " + Fmt("%.3g", err));
  }
  c.Note("worst |L - |x|/2| " + Fmt("%.2e", worst));

  ConversePropertyOptions opts;
  opts.tol = 1e-3;
  const auto sink = VerifyConverseProperties(
      Sink(), Origin(), CompactSet::MakeBox(P({-2, -2}), P({2, 2})), 100, 1, {}, {}, opts);
  c.Expect(sink.monotonicity_violations == 0 && sink.decrease_violations == 0 &&
               sink.evaluation_failures == 0,
           "sink violations " + std::to_string(sink.total_violations()));

  const OmegaEstimate cycle = EstimateOmega(VanDerPol(), P({0.1, 0}), {});
  const auto M = CompactSet::Cloud(cycle.points.points);
  const FiniteSetApprox samples = SampleAnnulus(M, 0.05, 1.0, 100, 2);
  const auto vdp = VerifyConverseProperties(VanDerPol(), M, samples, {}, {}, opts);
  c.Expect(vdp.monotonicity_violations == 0, "vdp monotonicity violations " +
                                                 std::to_string(vdp.monotonicity_violations));
  c.Expect(vdp.decrease_violations == 0,
           "vdp decrease violations " + std::to_string(vdp.decrease_violations));
  c.Expect(vdp.evaluation_failures == 0, "vdp evaluation failures");
  c.Note("checks sink " + std::to_string(sink.monotonicity_checks + sink.decrease_checks) +
         ", vdp " + std::to_string(vdp.monotonicity_checks + vdp.decrease_checks));
}

void CertificateVerifier(Checker& c) {
  const ScalarField energy = ScalarField::Parse("x1^2+x2^2", 2);
  for (const VectorField& field : {Sink(), Spiral()}) {
    for (double r_in : {0.0, 0.1}) {
      const auto r = VerifyCertificate(field, Origin(), energy, r_in, 2, 500, 1, {});
      c.Expect(r.verdict == CertificateVerdict::kAccepted, field.id() + " rejected");
      c.Expect(r.gradient_margin < -1e-6 * r_in * r_in,
               field.id() + " gradient margin " + Fmt("%.3g", r.gradient_margin));
    }
  }
  const auto bad = VerifyCertificate(VectorField::Parse({"x1"}), CompactSet::Point(P({0})),
                                     ScalarField::Parse("x1^2", 1), 0, 2, 500, 1, {});
  c.Expect(bad.verdict == CertificateVerdict::kRejected, "x1^2 accepted for x' = x1");

  test::RandomSmoothExpr gen(3, 99);
  int compared = 0;
  double worst = 0.0;
  while (compared < 1000) {
    const ScalarField s(gen.Next(4), 3);
    const StatePoint x = gen.Point();
    test::GradientComparison g;
    try {
      g = test::CompareGradients(s, x);
    } catch (const EvalError&) {
      continue;
    }
    if (g.skipped) continue;
    ++compared;
    worst = std::max(worst, g.relative_error);
    c.Expect(g.relative_error <= 1e-5, s.body().ToString());
  }
  c.Note("worst gradient error " + Fmt("%.2e", worst) + " over 1000 expressions");
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Determinism(Checker& c) {
  const fs::path root = fs::temp_directory_path() / "lyapset_acceptance_determinism";
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  int problems = 0;
  for (const auto& entry : fs::directory_iterator(LYAPSET_PROBLEMS_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++problems;
    for (const fs::path& out : {a, b}) {
      const std::string cmd = std::string(LYAPSET_CLI_PATH) + " analyze " +
                              entry.path().string() + " --out-dir " + out.string() + " > " +
                              (out / "log.txt").string() + " 2>&1";
      const int status = std::system(cmd.c_str());
      c.Expect(WIFEXITED(status) && WEXITSTATUS(status) != 1,
               entry.path().filename().string() + " failed to run");
    }
    const std::string stem = entry.path().stem().string();
    for (const std::string suffix : {".report.json", ".svg"}) {
      const fs::path fa = a / (stem + suffix), fb = b / (stem + suffix);
      c.Expect(fs::exists(fa) && fs::exists(fb), stem + suffix + " missing");
      c.Expect(Slurp(fa) == Slurp(fb), stem + suffix + " differs between runs");
    }
  }
  c.Expect(problems >= 5, "expected the bundled problems");
  c.Note(std::to_string(problems) + " bundled problems");
  fs::remove_all(root);
}

struct Criterion {
  const char* name;
  std::function<void(Checker&)> run;
};

}  // namespace
}  // namespace lyapset

int main() {
  using namespace lyapset;
  const std::vector<Criterion> criteria = {
      {"flow axioms", FlowAxioms},
      {"closed-form flow accuracy", ClosedFormFlow},
      {"omega-limit invariance", OmegaInvariance},
      {"attraction classification", AttractionLabels},
      {"region-of-attraction grids", RoaGrids},
      {"epsilon-delta search", EpsilonDelta},
      {"uniform attraction time", UniformAttraction},
      {"converse construction", ConverseConstruction},
      {"certificate verifier", CertificateVerifier},
      {"determinism", Determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].run(c);
    } catch (const std::exception& e) {
      c.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = c.failed() == 0 && c.checks() > 0;
    failed += pass ? 0 : 1;
    std::printf("%s %2zu %s (%d checks, %.1fs)%s%s\n", pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, c.checks(), secs, c.notes().empty() ? "" : ": ",
                c.notes().c_str());
    for (const auto& f : c.failures()) std::printf("       %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
