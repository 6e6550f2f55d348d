#include "lyapset/stability.h"

#include <algorithm>
#include <cmath>

#include "lyapset/parallel.h"

namespace lyapset {
namespace {

// Interior samples use a seed stream distinct from the shell's.
constexpr std::uint64_t kInteriorSeedSalt = 0x9e3779b97f4a7c15ull;

std::optional<Witness> ProbeOrbit(const VectorField& field, const CompactSet& set,
                                  const StatePoint& x, double epsilon,
                                  double delta, const IntegratorConfig& cfg,
                                  const DeltaSearchOptions& opts) {
  std::optional<Witness> witness;
  try {
    IntegrateSampled(field, x, opts.horizon_T,
                     std::min(opts.out_dt, opts.horizon_T), cfg,
                     [&](double t, const StatePoint& s) {
                       const double d = set.DistanceTo(s);
                       if (d >= epsilon) {
                         witness = Witness{x, delta, t, d, false};
                         return false;
                       }
                       return true;
                     });
  } catch (const FlowError& err) {
    witness = Witness{x, delta, err.time(), INFINITY,
                      err.kind() == FlowError::Kind::kEscapedDomain};
  }
  return witness;
}

}  // namespace

const char* ToString(StabilityVerdict verdict) {
  switch (verdict) {
    case StabilityVerdict::kStableEvidence:
      return "stable_evidence";
    case StabilityVerdict::kUnstableWitness:
      return "unstable_witness";
    case StabilityVerdict::kInconclusive:
      return "inconclusive";
  }
  return "?";
}

std::optional<Witness> FindEscape(const VectorField& field, const CompactSet& set,
                                  double epsilon, double delta,
                                  const IntegratorConfig& cfg,
                                  const DeltaSearchOptions& opts) {
  const FiniteSetApprox shell =
      SampleShell(set, delta, opts.shell_samples, opts.seed);
  const int interior_count = (opts.shell_samples + 3) / 4;
  const FiniteSetApprox interior = SampleNeighborhood(
      set, delta, interior_count, opts.seed ^ kInteriorSeedSalt);
  // Sequential with early exit: the first failing sample in index order is
  // the witness, independent of scheduling.
  for (const auto* group : {&shell, &interior}) {
    for (const auto& x : group->points) {
      if (auto w = ProbeOrbit(field, set, x, epsilon, delta, cfg, opts)) return w;
    }
  }
  return std::nullopt;
}

DeltaResult EstimateDelta(const VectorField& field, const CompactSet& set,
                          double epsilon, const IntegratorConfig& cfg,
                          const DeltaSearchOptions& opts) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("estimate_delta: epsilon must be > 0");
  }
  if (opts.shell_samples < 1 || !(opts.horizon_T > 0.0) || !(opts.out_dt > 0.0)) {
    throw std::invalid_argument("estimate_delta: invalid search options");
  }
  DeltaResult result;
  result.epsilon = epsilon;
  result.seed = opts.seed;
  result.samples_per_candidate = opts.shell_samples + (opts.shell_samples + 3) / 4;

  double accepted = 0.0;
  double rejected = epsilon;
  for (int step = 0; step < kDeltaBisectionSteps; ++step) {
    const double candidate = 0.5 * (accepted + rejected);
    if (auto w = FindEscape(field, set, epsilon, candidate, cfg, opts)) {
      rejected = candidate;
      result.witness = std::move(w);
    } else {
      accepted = candidate;
    }
  }
  if (accepted > 0.0) result.delta = accepted;
  return result;
}

double ReplayWitness(const VectorField& field, const CompactSet& set,
                     const Witness& witness, double horizon_T, double out_dt,
                     const IntegratorConfig& cfg) {
  double worst = set.DistanceTo(witness.point);
  try {
    IntegrateSampled(field, witness.point, horizon_T, std::min(out_dt, horizon_T),
                     cfg, [&](double, const StatePoint& s) {
                       worst = std::max(worst, set.DistanceTo(s));
                       return true;
                     });
  } catch (const FlowError&) {
    return INFINITY;
  }
  return worst;
}

InvarianceResult CheckPositiveInvariance(const VectorField& field,
                                         const CompactSet& set,
                                         const IntegratorConfig& cfg,
                                         int boundary_samples, double horizon_T,
                                         std::uint64_t seed, double out_dt) {
  if (!(horizon_T > 0.0)) {
    throw std::invalid_argument("positive invariance: horizon_T must be > 0");
  }
  const FiniteSetApprox members = SampleMembers(set, boundary_samples, seed);
  std::vector<double> excursion(members.points.size(), 0.0);
  std::vector<char> escaped(members.points.size(), 0);
  ParallelFor(members.points.size(), [&](std::size_t i) {
    try {
      IntegrateSampled(field, members.points[i], horizon_T,
                       std::min(out_dt, horizon_T), cfg,
                       [&](double, const StatePoint& s) {
                         excursion[i] = std::max(excursion[i], set.DistanceTo(s));
                         return true;
                       });
    } catch (const FlowError&) {
      escaped[i] = 1;
      excursion[i] = INFINITY;
    }
  });
  InvarianceResult result;
  result.samples = static_cast<int>(members.points.size());
  for (std::size_t i = 0; i < excursion.size(); ++i) {
    result.max_excursion = std::max(result.max_excursion, excursion[i]);
    result.escaped = result.escaped || escaped[i] != 0;
  }
  return result;
}

UniformTimeResult UniformAttractionTime(const VectorField& field,
                                        const FiniteSetApprox& K,
                                        const CompactSet& set, double epsilon,
                                        const IntegratorConfig& cfg, double T_max,
                                        double out_dt) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("uniform attraction: epsilon must be > 0");
  }
  if (K.points.empty()) throw std::invalid_argument("uniform attraction: K is empty");
  if (!(T_max > 0.0)) throw std::invalid_argument("uniform attraction: T_max must be > 0");

  const std::vector<double> times = SampleTimes(T_max, std::min(out_dt, T_max));
  // Index of the first sample after the last violation, per point.
  std::vector<std::size_t> settle(K.points.size(), 0);
  std::vector<char> failed(K.points.size(), 0);
  ParallelFor(K.points.size(), [&](std::size_t i) {
    std::size_t k = 0;
    try {
      IntegrateSampled(field, K.points[i], T_max, std::min(out_dt, T_max), cfg,
                       [&](double, const StatePoint& s) {
                         if (set.DistanceTo(s) >= epsilon) settle[i] = k + 1;
                         ++k;
                         return true;
                       });
    } catch (const FlowError&) {
      failed[i] = 1;
    }
  });

  UniformTimeResult result;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < K.points.size(); ++i) {
    if (failed[i]) {
      result.integration_failed = true;
      return result;
    }
    worst = std::max(worst, settle[i]);
  }
  if (worst < times.size()) result.time = times[worst];
  return result;
}

StabilityReport ClassifyStability(const VectorField& field, const CompactSet& set,
                                  const IntegratorConfig& cfg,
                                  const StabilityOptions& opts) {
  if (opts.epsilons.empty()) {
    throw std::invalid_argument("classify_stability: epsilons must be nonempty");
  }
  StabilityReport report;
  bool all_certified = true;
  bool any_witness = false;
  for (double eps : opts.epsilons) {
    report.pairs.push_back(EstimateDelta(field, set, eps, cfg, opts.delta));
    if (!report.pairs.back().delta) {
      all_certified = false;
      any_witness = any_witness || report.pairs.back().witness.has_value();
    }
  }

  report.invariance =
      CheckPositiveInvariance(field, set, cfg, opts.invariance_samples,
                              opts.invariance_horizon, opts.delta.seed);

  CompactSet box = [&] {
    if (opts.roa_box) return *opts.roa_box;
    const double grow = *std::max_element(opts.epsilons.begin(), opts.epsilons.end());
    const Box bb = set.BoundingBox();
    const StatePoint g = StatePoint::Constant(set.dimension(), grow);
    return CompactSet::MakeBox(bb.lo - g, bb.hi + g);
  }();
  report.grid = ComputeRoaGrid(field, set, box,
                               std::vector<int>(set.dimension(), opts.roa_resolution),
                               cfg, opts.roa_horizon, opts.roa_tol, opts.roa_out_dt);
  report.grid_nodes = report.grid.nodes.size();
  report.grid_attracted = report.grid.Count(AttractionLabel::kAttracted);
  const bool attracting = report.grid_attracted == report.grid_nodes;

  if (attracting) {
    FiniteSetApprox K{report.grid.nodes, "probe grid nodes"};
    const double eps_min = *std::min_element(opts.epsilons.begin(), opts.epsilons.end());
    report.uniform_T = UniformAttractionTime(field, K, set, eps_min, cfg,
                                             opts.roa_horizon, opts.roa_out_dt)
                           .time;
  }

  if (!all_certified && any_witness) {
    report.verdict = StabilityVerdict::kUnstableWitness;
    report.note = "an orbit from B(M, delta) left B(M, epsilon) for every candidate delta";
  } else if (all_certified && attracting) {
    report.verdict = StabilityVerdict::kStableEvidence;
    report.note = "all epsilons certified and the neighbourhood grid is attracted";
  } else if (all_certified) {
    report.verdict = StabilityVerdict::kInconclusive;
    report.note = "stable, not attracting within horizon";
  } else {
    report.verdict = StabilityVerdict::kInconclusive;
    report.note = "no delta certified and no witness recorded";
  }
  return report;
}

}  // namespace lyapset
