#include "lyapset/stability.h"

#include <gtest/gtest.h>

#include "test_util.h"

namespace lyapset {
namespace {

using test::Circle;
using test::P;

VectorField Sink() { return VectorField::Parse({"-x1", "-x2"}); }
VectorField Oscillator() { return VectorField::Parse({"x2", "-x1"}); }
const CompactSet kOrigin = CompactSet::Point(P({0, 0}));

GTEST_TEST(DeltaTest, Examples) {
  const DeltaResult sink = EstimateDelta(Sink(), kOrigin, 0.5, {});
  ASSERT_TRUE(sink.delta);
  EXPECT_GE(*sink.delta, 0.45);
  EXPECT_LE(*sink.delta, 0.5);

  const DeltaResult osc = EstimateDelta(Oscillator(), kOrigin, 1.0, {});
  ASSERT_TRUE(osc.delta);
  EXPECT_GE(*osc.delta, 0.9);

  const DeltaResult source = EstimateDelta(VectorField::Parse({"x1"}),
                                           CompactSet::Point(P({0})), 0.5, {});
  EXPECT_FALSE(source.delta);
  ASSERT_TRUE(source.witness);
}

GTEST_TEST(DeltaTest, BisectionResolutionAndSampleCounts) {
  const DeltaResult r = EstimateDelta(Sink(), kOrigin, 1.0, {});
  // Every candidate accepted: δ = ε(1 − 2⁻²⁰).
  EXPECT_EQ(*r.delta, 1.0 - std::ldexp(1.0, -kDeltaBisectionSteps));
  EXPECT_EQ(r.samples_per_candidate, 16 + 4);
  EXPECT_THROW(EstimateDelta(Sink(), kOrigin, 0.0, {}), std::invalid_argument);
}

GTEST_TEST(DeltaTest, WitnessReplaysTheViolation) {
  const auto M = CompactSet::Point(P({0}));
  const VectorField source = VectorField::Parse({"x1"});
  DeltaSearchOptions o;
  o.horizon_T = 20;
  for (double eps : {0.1, 0.5, 1.0}) {
    const DeltaResult r = EstimateDelta(source, M, eps, {}, o);
    ASSERT_TRUE(r.witness);
    const Witness& w = *r.witness;
    EXPECT_LE(M.DistanceTo(w.point), w.candidate_delta + 1e-12);
    EXPECT_GE(ReplayWitness(source, M, w, o.horizon_T, o.out_dt, {}), eps);
  }
}

GTEST_TEST(DeltaTest, DeltaIsMonotoneInEpsilon) {
  const VectorField field = VectorField::Parse({"-x1 + x2", "-x1 - x2"});
  const double resolution = std::ldexp(1.0, -kDeltaBisectionSteps);
  double previous = 0.0;
  for (double eps : {0.1, 0.3, 0.6, 1.0}) {
    const DeltaResult r = EstimateDelta(field, kOrigin, eps, {});
    ASSERT_TRUE(r.delta);
    EXPECT_GE(*r.delta + eps * resolution, previous);
    previous = *r.delta;
  }
}

GTEST_TEST(DeltaTest, CertificateSurvivesResampling) {
  // A found δ must hold for a fresh seed with twice the shell samples.
  for (const VectorField& field : {Sink(), Oscillator(), VectorField::Parse({"-x1 + x2", "-x1 - x2"})}) {
    for (double eps : {0.1, 0.5, 1.0}) {
      DeltaSearchOptions o;
      const DeltaResult r = EstimateDelta(field, kOrigin, eps, {}, o);
      ASSERT_TRUE(r.delta);
      DeltaSearchOptions fresh = o;
      fresh.seed = 12345;
      fresh.shell_samples = 2 * o.shell_samples;
      EXPECT_FALSE(FindEscape(field, kOrigin, eps, *r.delta, {}, fresh)) << field.id() << " " << eps;
    }
  }
}

GTEST_TEST(DeltaTest, AnisotropicOvershootIsSmall) {
  // Elliptic orbits: the worst shell direction is narrow, so a sparse shell
  // can overshoot the true δ slightly. Bound the overshoot against a dense
  // search instead of pretending it is zero.
  const VectorField field = VectorField::Parse({"-0.2*x1 + 2*x2", "-0.5*x1 - 0.2*x2"});
  DeltaSearchOptions o;
  o.horizon_T = 30;
  const DeltaResult sparse = EstimateDelta(field, kOrigin, 1.0, {}, o);
  DeltaSearchOptions dense = o;
  dense.shell_samples = 1024;
  const DeltaResult reference = EstimateDelta(field, kOrigin, 1.0, {}, dense);
  ASSERT_TRUE(sparse.delta && reference.delta);
  EXPECT_LT(*sparse.delta, 0.9);
  EXPECT_LE(std::fabs(*sparse.delta - *reference.delta), 0.01 * *reference.delta);
  DeltaSearchOptions fresh = o;
  fresh.seed = 12345;
  fresh.shell_samples = 2 * o.shell_samples;
  EXPECT_FALSE(FindEscape(field, kOrigin, 1.0, 0.99 * *sparse.delta, {}, fresh));
}

GTEST_TEST(InvarianceTest, Examples) {
  const auto ball = CompactSet::Ball(P({0, 0}), 1.0);
  const InvarianceResult in = CheckPositiveInvariance(Sink(), ball, {}, 32, 20, 1);
  EXPECT_LE(in.max_excursion, 1e-6);
  EXPECT_FALSE(in.escaped);

  const InvarianceResult out =
      CheckPositiveInvariance(VectorField::Parse({"x1", "x2"}), ball, {}, 32, 5, 1);
  EXPECT_TRUE(out.escaped || out.max_excursion >= std::exp(5.0) - 1 - 1e-6);

  const auto circle = CompactSet::Cloud(Circle(720));
  const double spacing = 2 * std::sin(std::numbers::pi / 720);
  const InvarianceResult osc = CheckPositiveInvariance(Oscillator(), circle, {}, 32, 10, 1);
  EXPECT_LE(osc.max_excursion, spacing + 1e-6);
}

GTEST_TEST(UniformTimeTest, Examples) {
  const FiniteSetApprox K{{P({-2}), P({-1}), P({1}), P({2})}, ""};
  const auto r = UniformAttractionTime(VectorField::Parse({"-x1"}), K,
                                       CompactSet::Point(P({0})), 0.1, {}, 10);
  ASSERT_TRUE(r.time);
  EXPECT_NEAR(*r.time, std::log(20.0), 0.1);

  const FiniteSetApprox inside{{P({0, 0})}, ""};
  EXPECT_EQ(UniformAttractionTime(Sink(), inside, kOrigin, 0.1, {}, 5).time, 0.0);

  const FiniteSetApprox ring{{P({2, 0})}, ""};
  const auto never = UniformAttractionTime(Oscillator(), ring, kOrigin, 1.0, {}, 20);
  EXPECT_FALSE(never.time);
  EXPECT_FALSE(never.integration_failed);
}

GTEST_TEST(UniformTimeTest, IntegrationFailureIsFlagged) {
  const FiniteSetApprox K{{P({1})}, ""};
  const auto r = UniformAttractionTime(VectorField::Parse({"x1"}), K, CompactSet::Point(P({0})),
                                       0.1, {}, 50);
  EXPECT_FALSE(r.time);
  EXPECT_TRUE(r.integration_failed);
}

GTEST_TEST(ClassifyTest, Examples) {
  StabilityOptions o;
  o.epsilons = {0.1, 0.5, 1.0};
  const StabilityReport sink = ClassifyStability(Sink(), kOrigin, {}, o);
  EXPECT_EQ(sink.verdict, StabilityVerdict::kStableEvidence);
  // Stability evidence implies invariance evidence.
  EXPECT_LE(sink.invariance.max_excursion, 1e-4);
  EXPECT_TRUE(sink.uniform_T);

  StabilityOptions p;
  p.epsilons = {0.5};
  const StabilityReport pitchfork =
      ClassifyStability(VectorField::Parse({"x1 - x1^3"}), CompactSet::Point(P({0})), {}, p);
  EXPECT_EQ(pitchfork.verdict, StabilityVerdict::kUnstableWitness);

  StabilityOptions q;
  q.epsilons = {0.5, 1.0};
  q.roa_horizon = 20;
  const StabilityReport osc = ClassifyStability(Oscillator(), kOrigin, {}, q);
  EXPECT_EQ(osc.verdict, StabilityVerdict::kInconclusive);
  EXPECT_EQ(osc.note, "stable, not attracting within horizon");
  for (const auto& pair : osc.pairs) EXPECT_TRUE(pair.delta);
}

GTEST_TEST(ClassifyTest, PairsRespectInvariants) {
  StabilityOptions o;
  o.epsilons = {0.2, 0.7};
  const StabilityReport r =
      ClassifyStability(VectorField::Parse({"x1"}), CompactSet::Point(P({0})), {}, o);
  for (const auto& pair : r.pairs) {
    if (pair.delta) {
      EXPECT_LE(*pair.delta, pair.epsilon);
    } else {
      EXPECT_TRUE(pair.witness);
    }
  }
  EXPECT_THROW(ClassifyStability(Sink(), kOrigin, {}, StabilityOptions{}), std::invalid_argument);
}

}  // namespace
}  // namespace lyapset
