#include "lyapset/flow.h"

#include <cstring>

#include <gtest/gtest.h>

#include "test_util.h"

namespace lyapset {
namespace {

using test::P;

IntegratorConfig Tol(double tol) {
  IntegratorConfig cfg;
  cfg.rel_tol = tol;
  cfg.abs_tol = tol * 1e-2;
  return cfg;
}

const VectorField kDecay = VectorField::Parse({"-x1"});
const VectorField kSink = VectorField::Parse({"-x1", "-x2"});
const VectorField kOscillator = VectorField::Parse({"x2", "-x1"});

GTEST_TEST(FlowTest, ClosedFormExamples) {
  EXPECT_NEAR(Flow(kDecay, P({1}), 1.0, {})[0], std::exp(-1.0), 1e-8);
  const StatePoint y = Flow(kOscillator, P({1, 0}), std::numbers::pi / 2, {});
  EXPECT_NEAR((y - P({0, -1})).norm(), 0.0, 1e-8);
}

GTEST_TEST(FlowTest, IdentityAtZeroIsBitwise) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const StatePoint x = test::UniformPoint(rng, 2, -1e3, 1e3);
    const StatePoint y = Flow(kOscillator, x, 0.0, {});
    ASSERT_EQ(std::memcmp(x.data(), y.data(), sizeof(double) * 2), 0);
  }
}

GTEST_TEST(FlowTest, NegativeTimeRunsBackwards) {
  EXPECT_NEAR(Flow(kDecay, P({1}), -1.0, {})[0], std::exp(1.0), 1e-8);
  const StatePoint x = P({0.3, -1.2});
  const StatePoint back = Flow(kOscillator, Flow(kOscillator, x, 2.5, Tol(1e-10)), -2.5, Tol(1e-10));
  EXPECT_NEAR((back - x).norm(), 0.0, 1e-8);
}

GTEST_TEST(FlowTest, Rk4FixedStepConverges) {
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::kRk4Fixed;
  double previous = INFINITY;
  for (double dt : {0.1, 0.05, 0.025}) {
    cfg.dt = dt;
    const double err = std::fabs(Flow(kDecay, P({1}), 2.0, cfg)[0] - std::exp(-2.0));
    EXPECT_LT(err, previous / 12.0);  // fourth order: ~16x per halving
    previous = err;
  }
}

GTEST_TEST(FlowTest, ContinuityBoundForLinearField) {
  // Lipschitz constant 1, so |φ(x+δ,t) − φ(x,t)| ≤ e^{|t|}|δ|.
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const StatePoint x = test::UniformPoint(rng, 2, -2, 2);
    StatePoint dir = test::UniformPoint(rng, 2, -1, 1);
    const StatePoint dx = 1e-6 * dir / dir.norm();
    const double t = std::uniform_real_distribution<double>(0, 3)(rng);
    const double gap = (Flow(kSink, x + dx, t, Tol(1e-12)) - Flow(kSink, x, t, Tol(1e-12))).norm();
    EXPECT_LE(gap, std::exp(t) * 1e-6 * (1 + 1e-3));
  }
}

GTEST_TEST(SemigroupTest, Examples) {
  EXPECT_EQ(SemigroupDefect(kDecay, P({1}), 0, 0, {}), 0.0);
  EXPECT_LE(SemigroupDefect(kDecay, P({1}), 0.5, 0.5, Tol(1e-10)), 1e-8);
  EXPECT_LE(SemigroupDefect(kOscillator, P({2, 0}), 1.0, -1.0, Tol(1e-10)), 1e-8);
}

GTEST_TEST(SemigroupTest, RandomizedDefectWithinHundredTimesTolerance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  const IntegratorConfig cfg = Tol(1e-10);
  for (const VectorField* field : {&kSink, &kOscillator}) {
    for (int k = 0; k < 100; ++k) {
      const StatePoint x = test::UniformPoint(rng, 2, -2, 2);
      const double scale = std::max(1.0, x.norm());
      EXPECT_LE(SemigroupDefect(*field, x, time(rng), time(rng), cfg), 100 * 1e-10 * scale);
    }
  }
}

GTEST_TEST(SampleTimesTest, GridIncludesEndpoints) {
  EXPECT_EQ(SampleTimes(2.0, 1.0), (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_EQ(SampleTimes(0.5, 0.5), (std::vector<double>{0.0, 0.5}));
  const auto t = SampleTimes(1.0, 0.3);
  EXPECT_EQ(t, (std::vector<double>{0.0, 0.3, 0.6, 0.3 * 3, 1.0}));
  EXPECT_EQ(SampleTimes(30.0, 0.01).size(), 3001u);
  EXPECT_EQ(SampleTimes(30.0, 0.01).back(), 30.0);
}

GTEST_TEST(TrajectoryTest, SamplesMatchClosedForm) {
  const Trajectory tr = ComputeTrajectory(kDecay, P({1}), 2.0, 1.0, {});
  ASSERT_EQ(tr.states.size(), 3u);
  EXPECT_EQ(tr.states[0][0], 1.0);
  EXPECT_NEAR(tr.states[1][0], std::exp(-1.0), 1e-9);
  EXPECT_NEAR(tr.states[2][0], std::exp(-2.0), 1e-9);
  EXPECT_EQ(tr.field_id, "[-x1]");
}

GTEST_TEST(TrajectoryTest, EscapeIsReportedBeforeHorizon) {
  const VectorField growth = VectorField::Parse({"x1"});
  try {
    ComputeTrajectory(growth, P({1}), 100.0, 0.1, {});
    FAIL() << "expected FlowError";
  } catch (const FlowError& e) {
    EXPECT_EQ(e.kind(), FlowError::Kind::kEscapedDomain);
    EXPECT_GT(e.time(), 13.0);
    EXPECT_LT(e.time(), 14.5);
    EXPECT_GT(e.state().norm(), 1e6);
  }
}

GTEST_TEST(TrajectoryTest, EvaluationErrorsSurface) {
  const VectorField bad = VectorField::Parse({"1/x1"});
  try {
    Flow(bad, P({0}), 1.0, {});
    FAIL() << "expected FlowError";
  } catch (const FlowError& e) {
    EXPECT_EQ(e.kind(), FlowError::Kind::kEvaluation);
  }
}

GTEST_TEST(TrajectoryTest, VisitorCanStopEarly) {
  int visits = 0;
  IntegrateSampled(kSink, P({1, 1}), 10.0, 0.5, {}, [&](double t, const StatePoint&) {
    ++visits;
    return t < 1.0;
  });
  EXPECT_EQ(visits, 3);
}

GTEST_TEST(IntegratorConfigTest, ValidateRejectsNonsense) {
  IntegratorConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.rel_tol = 0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.dt = -1;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = {};
  cfg.max_steps = 0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

GTEST_TEST(IntegratorConfigTest, MaxStepsIsEnforced) {
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::kRk4Fixed;
  cfg.dt = 1e-3;
  cfg.max_steps = 10;
  try {
    Flow(kDecay, P({1}), 1.0, cfg);
    FAIL() << "expected FlowError";
  } catch (const FlowError& e) {
    EXPECT_EQ(e.kind(), FlowError::Kind::kMaxSteps);
  }
}

}  // namespace
}  // namespace lyapset
