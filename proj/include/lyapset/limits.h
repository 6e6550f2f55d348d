#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyapset/expr.h"
#include "lyapset/flow.h"
#include "lyapset/geometry.h"

namespace lyapset {

/// Raised when an orbit leaves the integration domain before its ω-limit
/// set can be sampled, i.e. the forward orbit is numerically unbounded.
class OrbitUnboundedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OmegaOptions {
  double transient_T = 50.0;
  double window_T = 20.0;
  double out_dt = 0.01;
  double cluster_tol = 1e-3;
};

/// Finite estimate of Ω(x) plus a measure of how far it is from invariant.
struct OmegaEstimate {
  FiniteSetApprox points;
  double transient_T = 0.0;
  double window_T = 0.0;
  double out_dt = 0.0;
  double cluster_tol = 0.0;
  /// τ used for the invariance probe: defect = hausdorff(φ(points, τ), points).
  double probe_time = 0.0;
  double invariance_defect = 0.0;
  std::size_t window_samples = 0;
};

/// Greedy first-come clustering: a sample becomes a representative unless an
/// earlier representative lies closer than `tol`.
std::vector<StatePoint> GreedyCluster(const std::vector<StatePoint>& samples,
                                      double tol);

OmegaEstimate EstimateOmega(const VectorField& field, const StatePoint& x,
                            const IntegratorConfig& cfg,
                            const OmegaOptions& opts = {});

enum class AttractionLabel {
  kAttracted,
  kWeaklyAttracted,
  kNotAttractedWithinHorizon,
};

const char* ToString(AttractionLabel label);

struct AttractionVerdict {
  AttractionLabel label = AttractionLabel::kNotAttractedWithinHorizon;
  double final_distance = 0.0;
  double min_distance = 0.0;
  double horizon = 0.0;
  /// Set when the orbit left the domain; distances cover the part before.
  bool escaped = false;
  /// Non-empty when integration failed for any reason.
  std::string error;
};

/// attracted: every sample with t >= 0.9·horizon has d(φ(x,t), M) <= tol.
/// weakly_attracted: not attracted, but some sample (t = 0 included) is
/// within tol. Otherwise not_attracted_within_horizon.
AttractionVerdict ClassifyAttraction(const VectorField& field,
                                     const StatePoint& x, const CompactSet& set,
                                     const IntegratorConfig& cfg,
                                     double horizon_T, double tol,
                                     double out_dt = 0.01);

struct RoaGrid {
  Box box;
  std::vector<int> resolution;
  std::vector<StatePoint> nodes;
  std::vector<AttractionVerdict> verdicts;

  std::size_t Count(AttractionLabel label) const;
  std::size_t errors() const;
};

/// Node coordinates of a regular grid over `box`, axis 0 varying fastest.
std::vector<StatePoint> GridNodes(const Box& box,
                                  const std::vector<int>& resolution);

/// Classifies every node of a regular grid over `box` (which must be a Box
/// set). Per-node failures are recorded in the verdict, never thrown.
RoaGrid ComputeRoaGrid(const VectorField& field, const CompactSet& set,
                       const CompactSet& box, const std::vector<int>& resolution,
                       const IntegratorConfig& cfg, double horizon_T, double tol,
                       double out_dt = 0.01);

struct DecayCurve {
  OmegaEstimate omega;
  std::vector<double> times;
  std::vector<double> distances;  // d(φ(x, t), Ω̂(x))
};

/// Distance from the orbit of x to its own estimated ω-limit set. A
/// non-positive horizon means transient_T + window_T.
DecayCurve OmegaDistanceDecay(const VectorField& field, const StatePoint& x,
                              const IntegratorConfig& cfg, double horizon_T = 0,
                              const OmegaOptions& opts = {});

}  // namespace lyapset
