#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lyapset/expr.h"
#include "lyapset/flow.h"
#include "lyapset/geometry.h"

namespace lyapset {

enum class Quadrature { kTrapezoid, kSimpson };

const char* ToString(Quadrature q);

/// Truncation and weighting of the converse construction. The weight is
/// α(t) = exp(−λt).
struct ConverseConfig {
  double horizon_T = 30.0;
  double out_dt = 0.01;
  double lambda = 1.0;
  Quadrature quadrature = Quadrature::kSimpson;

  /// horizon_T must be an integer multiple of out_dt (even for Simpson).
  void Validate() const;
  int intervals() const;
};

/// Composite rule over equally spaced samples. Simpson needs an odd sample
/// count (even interval count).
double Integrate(std::span<const double> values, double h, Quadrature rule);

struct EllEstimate {
  double value = 0.0;
  /// The final 10% of distances stayed below the running maximum, i.e. the
  /// truncated sup is not still growing at the horizon.
  bool tail_settled = false;
};

/// ℓ(x) = sup over t in [0, T] of d(φ(x,t), M) on the out_dt grid.
EllEstimate Ell(const VectorField& field, const CompactSet& set,
                const StatePoint& x, const IntegratorConfig& cfg,
                const ConverseConfig& cc);

struct BigLEstimate {
  double value = 0.0;
  double ell_max = 0.0;
  /// ℓ_max·exp(−λT)/λ: bound on the discarded tail of the integral.
  double truncation_bound = 0.0;
  bool tail_settled = false;
};

/// L(x) = ∫₀ᵀ exp(−λt) ℓ(φ(x,t)) dt. One orbit over [0, 2T] serves every
/// ℓ(φ(x,t)) through a sliding-window maximum of width T.
BigLEstimate BigL(const VectorField& field, const CompactSet& set,
                  const StatePoint& x, const IntegratorConfig& cfg,
                  const ConverseConfig& cc);

struct ConversePropertyOptions {
  double tol = 1e-3;
  std::vector<double> probe_times = {0.1, 0.5, 1.0, 2.0};
  double continuity_step = 1e-4;
  /// |L(y) − L(x)| above this at |y − x| = continuity_step is a violation.
  /// Non-positive means 10·tol.
  double continuity_bound = 0.0;
};

struct ConverseViolation {
  enum class Kind { kMonotonicity, kStrictDecrease, kContinuity, kEvaluation };
  Kind kind = Kind::kEvaluation;
  std::size_t sample = 0;
  StatePoint point;
  double probe_time = 0.0;
  double lhs = 0.0;  // value after the flow (or at the perturbed point)
  double rhs = 0.0;  // value at the sample
  std::string message;
};

const char* ToString(ConverseViolation::Kind kind);

struct ConverseRow {
  StatePoint x;
  double distance = 0.0;
  double ell = 0.0;
  double big_l = 0.0;
  bool tail_settled = false;
};

struct ConversePropertyReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t monotonicity_checks = 0;
  std::size_t decrease_checks = 0;
  std::size_t decrease_exempt = 0;
  std::size_t monotonicity_violations = 0;
  std::size_t decrease_violations = 0;
  std::size_t continuity_violations = 0;
  std::size_t evaluation_failures = 0;
  double max_continuity_jump = 0.0;
  double max_truncation_bound = 0.0;
  std::vector<ConverseViolation> violations;
  std::vector<ConverseRow> rows;

  std::size_t total_violations() const {
    return monotonicity_violations + decrease_violations +
           continuity_violations + evaluation_failures;
  }
};

/// Samples `sample_box` uniformly and checks, at each probe time t:
/// ℓ(φ(x,t)) <= ℓ(x) + tol, L(φ(x,t)) < L(x) when d(x, M) > 10·tol, and
/// a continuity probe of L at scale continuity_step.
ConversePropertyReport VerifyConverseProperties(
    const VectorField& field, const CompactSet& set, const CompactSet& sample_box,
    int n_samples, std::uint64_t seed, const IntegratorConfig& cfg,
    const ConverseConfig& cc, const ConversePropertyOptions& opts = {});

/// Same checks on caller-supplied sample points.
ConversePropertyReport VerifyConverseProperties(
    const VectorField& field, const CompactSet& set,
    const FiniteSetApprox& samples, const IntegratorConfig& cfg,
    const ConverseConfig& cc, const ConversePropertyOptions& opts = {});

enum class CertificateVerdict { kAccepted, kRejected };

const char* ToString(CertificateVerdict verdict);

struct CertificateOptions {
  /// Bound for |L| on M; strict-decrease probes skip d(x, M) <= 10·tol.
  double tol = 1e-9;
  double probe_time = 0.1;
  /// Points of M sampled for the zero-on-M condition.
  int member_samples = 64;
};

struct CertificateSample {
  StatePoint x;
  double distance = 0.0;
  double value = 0.0;
  double lie_derivative = 0.0;  // ∇L(x)·V(x)
  double decrease = 0.0;        // L(φ(x, t)) − L(x), NaN when exempt
};

struct CertificateReport {
  double positivity_margin = 0.0;
  double zero_on_M_max = 0.0;
  double gradient_margin = 0.0;
  double trajectory_decrease_margin = 0.0;
  CertificateVerdict verdict = CertificateVerdict::kRejected;
  int samples = 0;
  std::uint64_t seed = 0;
  double r_in = 0.0;
  double r_out = 0.0;
  double tol = 0.0;
  bool used_finite_differences = false;
  std::size_t decrease_exempt = 0;
  std::string diagnostic;
  std::vector<CertificateSample> rows;
};

/// Checks a candidate L: L = 0 on M, L > 0 and ∇L·V < 0 on the annulus
/// r_in < d(x, M) <= r_out, and L decreasing along sampled orbits.
CertificateReport VerifyCertificate(const VectorField& field, const CompactSet& set,
                                    const ScalarField& candidate, double r_in,
                                    double r_out, int n_samples,
                                    std::uint64_t seed, const IntegratorConfig& cfg,
                                    const CertificateOptions& opts = {});

}  // namespace lyapset
