#include "lyapset/lyapunov.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "lyapset/parallel.h"

namespace lyapset {
namespace {

std::vector<double> OrbitDistances(const VectorField& field, const CompactSet& set,
                                   const StatePoint& x, double T, double out_dt,
                                   const IntegratorConfig& cfg) {
  std::vector<double> d;
  IntegrateSampled(field, x, T, out_dt, cfg, [&](double, const StatePoint& s) {
    d.push_back(set.DistanceTo(s));
    return true;
  });
  return d;
}

// Tail condition over the first `count` distances.
bool TailSettled(const std::vector<double>& d, std::size_t count) {
  const double overall = *std::max_element(d.begin(), d.begin() + count);
  if (overall <= 1e-12) return true;
  const std::size_t tail_begin =
      std::min(count - 1, static_cast<std::size_t>(std::ceil(0.9 * (count - 1))));
  const double tail = *std::max_element(d.begin() + tail_begin, d.begin() + count);
  return tail < overall;
}

StatePoint RandomUnit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  StatePoint u(n);
  do {
    for (int k = 0; k < n; ++k) u[k] = normal(rng);
  } while (u.norm() < 1e-12);
  return u.normalized();
}

struct SampleOutcome {
  ConverseRow row;
  std::size_t monotonicity_checks = 0;
  std::size_t decrease_checks = 0;
  std::size_t decrease_exempt = 0;
  double continuity_jump = 0.0;
  double truncation_bound = 0.0;
  std::vector<ConverseViolation> violations;
};

}  // namespace

const char* ToString(Quadrature q) {
  return q == Quadrature::kSimpson ? "simpson" : "trapezoid";
}

const char* ToString(ConverseViolation::Kind kind) {
  switch (kind) {
    case ConverseViolation::Kind::kMonotonicity:
      return "monotonicity";
    case ConverseViolation::Kind::kStrictDecrease:
      return "strict_decrease";
    case ConverseViolation::Kind::kContinuity:
      return "continuity";
    case ConverseViolation::Kind::kEvaluation:
      return "evaluation";
  }
  return "?";
}

const char* ToString(CertificateVerdict verdict) {
  return verdict == CertificateVerdict::kAccepted ? "accepted" : "rejected";
}

void ConverseConfig::Validate() const {
  if (!(horizon_T > 0.0) || !(out_dt > 0.0) || !(lambda > 0.0) ||
      !std::isfinite(horizon_T) || !std::isfinite(lambda)) {
    throw std::invalid_argument("converse: horizon_T, out_dt and lambda must be > 0");
  }
  const double ratio = horizon_T / out_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw std::invalid_argument("converse: horizon_T must be a multiple of out_dt");
  }
  if (quadrature == Quadrature::kSimpson && static_cast<long long>(rounded) % 2 != 0) {
    throw std::invalid_argument("converse: simpson needs an even interval count");
  }
}

int ConverseConfig::intervals() const {
  return static_cast<int>(std::round(horizon_T / out_dt));
}

double Integrate(std::span<const double> f, double h, Quadrature rule) {
  if (f.size() < 2) throw std::invalid_argument("quadrature: need >= 2 samples");
  const std::size_t n = f.size() - 1;
  if (rule == Quadrature::kTrapezoid) {
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i < n; ++i) sum += f[i];
    return h * sum;
  }
  if (n % 2 != 0) throw std::invalid_argument("simpson: odd interval count");
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < n; ++i) (i % 2 ? odd : even) += f[i];
  return h / 3.0 * (f.front() + 4.0 * odd + 2.0 * even + f.back());
}

EllEstimate Ell(const VectorField& field, const CompactSet& set,
                const StatePoint& x, const IntegratorConfig& cfg,
                const ConverseConfig& cc) {
  cc.Validate();
  const std::vector<double> d =
      OrbitDistances(field, set, x, cc.horizon_T, cc.out_dt, cfg);
  return {*std::max_element(d.begin(), d.end()), TailSettled(d, d.size())};
}

BigLEstimate BigL(const VectorField& field, const CompactSet& set,
                  const StatePoint& x, const IntegratorConfig& cfg,
                  const ConverseConfig& cc) {
  cc.Validate();
  const std::size_t n = static_cast<std::size_t>(cc.intervals());
  const std::vector<double> d =
      OrbitDistances(field, set, x, 2.0 * cc.horizon_T, cc.out_dt, cfg);
  if (d.size() != 2 * n + 1) {
    throw std::logic_error("converse: unexpected sample count");
  }

  // ℓ(φ(x, t_k)) = max of d over samples k..k+n (monotone deque).
  std::vector<double> ell(n + 1);
  std::deque<std::size_t> window;
  for (std::size_t j = 0; j < d.size(); ++j) {
    while (!window.empty() && d[window.back()] <= d[j]) window.pop_back();
    window.push_back(j);
    if (j >= n) {
      const std::size_t k = j - n;
      while (window.front() < k) window.pop_front();
      ell[k] = d[window.front()];
    }
  }

  std::vector<double> integrand(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * cc.out_dt;
    integrand[k] = std::exp(-cc.lambda * t) * ell[k];
  }
  BigLEstimate est;
  est.value = Integrate(integrand, cc.out_dt, cc.quadrature);
  est.ell_max = *std::max_element(ell.begin(), ell.end());
  est.truncation_bound = est.ell_max * std::exp(-cc.lambda * cc.horizon_T) / cc.lambda;
  est.tail_settled = TailSettled(d, n + 1);
  return est;
}

ConversePropertyReport VerifyConverseProperties(
    const VectorField& field, const CompactSet& set, const CompactSet& sample_box,
    int n_samples, std::uint64_t seed, const IntegratorConfig& cfg,
    const ConverseConfig& cc, const ConversePropertyOptions& opts) {
  const auto* box = std::get_if<Box>(&sample_box.shape());
  if (box == nullptr) throw std::invalid_argument("converse: sample region must be a box");
  if (n_samples < 1) throw std::invalid_argument("converse: n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FiniteSetApprox samples;
  samples.meta = "uniform box samples seed=" + std::to_string(seed);
  for (int i = 0; i < n_samples; ++i) {
    StatePoint p(box->lo.size());
    for (int k = 0; k < p.size(); ++k) {
      p[k] = box->lo[k] + (box->hi[k] - box->lo[k]) * unit(rng);
    }
    samples.points.push_back(std::move(p));
  }
  ConversePropertyReport report =
      VerifyConverseProperties(field, set, samples, cfg, cc, opts);
  report.seed = seed;
  return report;
}

ConversePropertyReport VerifyConverseProperties(
    const VectorField& field, const CompactSet& set,
    const FiniteSetApprox& samples, const IntegratorConfig& cfg,
    const ConverseConfig& cc, const ConversePropertyOptions& opts) {
  cc.Validate();
  const double bound =
      opts.continuity_bound > 0.0 ? opts.continuity_bound : 10.0 * opts.tol;
  std::vector<SampleOutcome> outcomes(samples.points.size());

  ParallelFor(samples.points.size(), [&](std::size_t i) {
    SampleOutcome& out = outcomes[i];
    const StatePoint& x = samples.points[i];
    out.row.x = x;
    out.row.distance = set.DistanceTo(x);
    const auto violation = [&](ConverseViolation::Kind kind, double t, double lhs,
                               double rhs, std::string message) {
      out.violations.push_back(
          ConverseViolation{kind, i, x, t, lhs, rhs, std::move(message)});
    };
    try {
      const EllEstimate ell0 = Ell(field, set, x, cfg, cc);
      const BigLEstimate l0 = BigL(field, set, x, cfg, cc);
      out.row.ell = ell0.value;
      out.row.big_l = l0.value;
      out.row.tail_settled = l0.tail_settled;
      out.truncation_bound = l0.truncation_bound;

      const bool exempt = out.row.distance <= 10.0 * opts.tol;
      for (double t : opts.probe_times) {
        const StatePoint y = Flow(field, x, t, cfg);
        const double ell_t = Ell(field, set, y, cfg, cc).value;
        ++out.monotonicity_checks;
        if (ell_t > ell0.value + opts.tol) {
          violation(ConverseViolation::Kind::kMonotonicity, t, ell_t, ell0.value,
                    "ell increased along the orbit");
        }
        if (exempt) {
          ++out.decrease_exempt;
          continue;
        }
        const double l_t = BigL(field, set, y, cfg, cc).value;
        ++out.decrease_checks;
        if (!(l_t < l0.value)) {
          violation(ConverseViolation::Kind::kStrictDecrease, t, l_t, l0.value,
                    "L did not strictly decrease along the orbit");
        }
      }

      std::mt19937_64 rng(i);
      const StatePoint y =
          x + opts.continuity_step * RandomUnit(static_cast<int>(x.size()), rng);
      const double l_y = BigL(field, set, y, cfg, cc).value;
      out.continuity_jump = std::abs(l_y - l0.value);
      if (out.continuity_jump > bound) {
        violation(ConverseViolation::Kind::kContinuity, 0.0, l_y, l0.value,
                  "L jumped by more than the continuity bound");
      }
    } catch (const std::exception& err) {
      violation(ConverseViolation::Kind::kEvaluation, 0.0, NAN, NAN, err.what());
    }
  });

  ConversePropertyReport report;
  report.samples = samples.points.size();
  for (auto& out : outcomes) {
    report.monotonicity_checks += out.monotonicity_checks;
    report.decrease_checks += out.decrease_checks;
    report.decrease_exempt += out.decrease_exempt;
    report.max_continuity_jump = std::max(report.max_continuity_jump, out.continuity_jump);
    report.max_truncation_bound = std::max(report.max_truncation_bound, out.truncation_bound);
    for (auto& v : out.violations) {
      switch (v.kind) {
        case ConverseViolation::Kind::kMonotonicity:
          ++report.monotonicity_violations;
          break;
        case ConverseViolation::Kind::kStrictDecrease:
          ++report.decrease_violations;
          break;
        case ConverseViolation::Kind::kContinuity:
          ++report.continuity_violations;
          break;
        case ConverseViolation::Kind::kEvaluation:
          ++report.evaluation_failures;
          break;
      }
      report.violations.push_back(std::move(v));
    }
    report.rows.push_back(std::move(out.row));
  }
  return report;
}

CertificateReport VerifyCertificate(const VectorField& field, const CompactSet& set,
                                    const ScalarField& candidate, double r_in,
                                    double r_out, int n_samples,
                                    std::uint64_t seed, const IntegratorConfig& cfg,
                                    const CertificateOptions& opts) {
  if (candidate.dimension() != field.dimension() ||
      set.dimension() != field.dimension()) {
    throw std::invalid_argument("certificate: dimension mismatch");
  }
  CertificateReport report;
  report.samples = n_samples;
  report.seed = seed;
  report.r_in = r_in;
  report.r_out = r_out;
  report.tol = opts.tol;

  const FiniteSetApprox annulus = SampleAnnulus(set, r_in, r_out, n_samples, seed);
  const FiniteSetApprox members = SampleMembers(set, opts.member_samples, seed + 1);

  bool failed = false;
  try {
    for (const auto& m : members.points) {
      report.zero_on_M_max = std::max(report.zero_on_M_max, std::abs(candidate.Evaluate(m)));
    }
    report.positivity_margin = INFINITY;
    report.gradient_margin = -INFINITY;
    report.trajectory_decrease_margin = -INFINITY;
    for (const auto& x : annulus.points) {
      CertificateSample row;
      row.x = x;
      row.distance = set.DistanceTo(x);
      row.value = candidate.Evaluate(x);
      StatePoint grad;
      if (candidate.differentiable()) {
        grad = candidate.Gradient(x);
      } else {
        grad = candidate.FiniteDifferenceGradient(x);
        report.used_finite_differences = true;
      }
      row.lie_derivative = grad.dot(field.Evaluate(x));
      if (row.distance > 10.0 * opts.tol) {
        const StatePoint y = Flow(field, x, opts.probe_time, cfg);
        row.decrease = candidate.Evaluate(y) - row.value;
        report.trajectory_decrease_margin =
            std::max(report.trajectory_decrease_margin, row.decrease);
      } else {
        row.decrease = NAN;
        ++report.decrease_exempt;
      }
      report.positivity_margin = std::min(report.positivity_margin, row.value);
      report.gradient_margin = std::max(report.gradient_margin, row.lie_derivative);
      report.rows.push_back(std::move(row));
    }
    if (report.decrease_exempt == report.rows.size()) {
      failed = true;
      report.trajectory_decrease_margin = 0.0;
      report.diagnostic = "every annulus sample fell inside the strict-decrease exemption";
    }
  } catch (const std::exception& err) {
    failed = true;
    report.diagnostic = std::string("evaluation failed: ") + err.what();
    if (!std::isfinite(report.positivity_margin)) report.positivity_margin = 0.0;
    if (!std::isfinite(report.gradient_margin)) report.gradient_margin = 0.0;
    if (!std::isfinite(report.trajectory_decrease_margin)) {
      report.trajectory_decrease_margin = 0.0;
    }
  }

  const bool accepted = !failed && report.positivity_margin > 0.0 &&
                        report.zero_on_M_max <= opts.tol &&
                        report.gradient_margin < 0.0 &&
                        report.trajectory_decrease_margin < 0.0;
  report.verdict = accepted ? CertificateVerdict::kAccepted : CertificateVerdict::kRejected;
  if (!accepted && report.diagnostic.empty()) {
    std::string why;
    if (!(report.positivity_margin > 0.0)) why += " L not positive off M;";
    if (!(report.zero_on_M_max <= opts.tol)) why += " L not zero on M;";
    if (!(report.gradient_margin < 0.0)) why += " grad L . V not negative;";
    if (!(report.trajectory_decrease_margin < 0.0)) why += " L not decreasing along orbits;";
    report.diagnostic = "rejected:" + why;
  }
  return report;
}

}  // namespace lyapset
