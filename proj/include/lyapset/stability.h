#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyapset/expr.h"
#include "lyapset/flow.h"
#include "lyapset/geometry.h"
#include "lyapset/limits.h"

namespace lyapset {

/// A point of B(M, δ) whose sampled orbit reached d(φ(x,t), M) >= ε (or left
/// the integration domain). Replaying the orbit reproduces the violation.
struct Witness {
  StatePoint point;
  double candidate_delta = 0.0;
  double exit_time = 0.0;
  double exit_distance = 0.0;
  bool escaped = false;
};

struct DeltaSearchOptions {
  double horizon_T = 50.0;
  int shell_samples = 16;
  double out_dt = 0.05;
  std::uint64_t seed = 0;
};

inline constexpr int kDeltaBisectionSteps = 20;

struct DeltaResult {
  double epsilon = 0.0;
  std::optional<double> delta;
  /// Witness from the last rejected candidate, if any was rejected.
  std::optional<Witness> witness;
  int samples_per_candidate = 0;
  std::uint64_t seed = 0;
};

/// Checks one candidate δ: orbits from H(M, δ) and from the interior of
/// B(M, δ) must keep d(φ(x,t), M) < ε at every output sample.
std::optional<Witness> FindEscape(const VectorField& field, const CompactSet& set,
                                  double epsilon, double delta,
                                  const IntegratorConfig& cfg,
                                  const DeltaSearchOptions& opts);

/// Largest δ ∈ (0, ε] found by 20 bisection steps such that
/// γ⁺(B(M, δ)) ⊂ B(M, ε) on the sampled orbits, or nothing with a witness.
DeltaResult EstimateDelta(const VectorField& field, const CompactSet& set,
                          double epsilon, const IntegratorConfig& cfg,
                          const DeltaSearchOptions& opts = {});

/// Replays a witness: returns the largest d(φ(x,t), M) over the sampled
/// orbit (or +inf if it escapes).
double ReplayWitness(const VectorField& field, const CompactSet& set,
                     const Witness& witness, double horizon_T, double out_dt,
                     const IntegratorConfig& cfg);

struct InvarianceResult {
  double max_excursion = 0.0;
  bool escaped = false;
  int samples = 0;
};

/// Flows points of M forward and reports sup d(φ(x,t), M). Escape sets the
/// flag and an infinite excursion.
InvarianceResult CheckPositiveInvariance(const VectorField& field,
                                         const CompactSet& set,
                                         const IntegratorConfig& cfg,
                                         int boundary_samples, double horizon_T,
                                         std::uint64_t seed,
                                         double out_dt = 0.01);

struct UniformTimeResult {
  std::optional<double> time;
  bool integration_failed = false;
};

/// Smallest sampled T with d(φ(k,t), M) < ε for all k in K and all sampled
/// t in [T, T_max].
UniformTimeResult UniformAttractionTime(const VectorField& field,
                                        const FiniteSetApprox& K,
                                        const CompactSet& set, double epsilon,
                                        const IntegratorConfig& cfg, double T_max,
                                        double out_dt = 0.01);

enum class StabilityVerdict { kStableEvidence, kUnstableWitness, kInconclusive };

const char* ToString(StabilityVerdict verdict);

struct StabilityOptions {
  std::vector<double> epsilons;
  DeltaSearchOptions delta;
  int invariance_samples = 32;
  double invariance_horizon = 20.0;
  /// Neighbourhood probe grid. When unset, the bounding box of M grown by the
  /// largest ε is used.
  std::optional<CompactSet> roa_box;
  int roa_resolution = 11;
  double roa_horizon = 50.0;
  double roa_tol = 1e-3;
  double roa_out_dt = 0.01;
};

struct StabilityReport {
  std::vector<DeltaResult> pairs;
  InvarianceResult invariance;
  std::optional<double> uniform_T;
  std::size_t grid_nodes = 0;
  std::size_t grid_attracted = 0;
  RoaGrid grid;
  StabilityVerdict verdict = StabilityVerdict::kInconclusive;
  std::string note;
};

StabilityReport ClassifyStability(const VectorField& field, const CompactSet& set,
                                  const IntegratorConfig& cfg,
                                  const StabilityOptions& opts);

}  // namespace lyapset
