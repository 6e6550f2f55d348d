#include "lyapset/limits.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lyapset/kd_tree.h"
#include "lyapset/parallel.h"

namespace lyapset {
namespace {

using CellKey = std::vector<long long>;

struct CellHash {
  std::size_t operator()(const CellKey& key) const {
    std::size_t h = 1469598103934665603ull;
    for (long long v : key) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// Above this dimension the 3ⁿ neighbour sweep costs more than brute force.
constexpr int kMaxHashedDimension = 6;

}  // namespace

const char* ToString(AttractionLabel label) {
  switch (label) {
    case AttractionLabel::kAttracted:
      return "attracted";
    case AttractionLabel::kWeaklyAttracted:
      return "weakly_attracted";
    case AttractionLabel::kNotAttractedWithinHorizon:
      return "not_attracted_within_horizon";
  }
  return "?";
}

std::vector<StatePoint> GreedyCluster(const std::vector<StatePoint>& samples,
                                      double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("cluster: tol must be > 0");
  std::vector<StatePoint> reps;
  if (samples.empty()) return reps;
  const int n = static_cast<int>(samples.front().size());

  if (n > kMaxHashedDimension) {
    for (const auto& p : samples) {
      const bool covered = std::any_of(reps.begin(), reps.end(), [&](const StatePoint& r) {
        return (p - r).norm() < tol;
      });
      if (!covered) reps.push_back(p);
    }
    return reps;
  }

  // Cells of side tol: any representative closer than tol lies in one of the
  // 3ⁿ cells around the sample's own cell.
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells;
  CellKey key(n), probe(n);
  int neighbours = 1;
  for (int k = 0; k < n; ++k) neighbours *= 3;
  for (const auto& p : samples) {
    for (int k = 0; k < n; ++k) {
      key[k] = static_cast<long long>(std::floor(p[k] / tol));
    }
    bool covered = false;
    for (int code = 0; code < neighbours && !covered; ++code) {
      int c = code;
      for (int k = 0; k < n; ++k) {
        probe[k] = key[k] + (c % 3) - 1;
        c /= 3;
      }
      const auto it = cells.find(probe);
      if (it == cells.end()) continue;
      for (std::size_t idx : it->second) {
        if ((p - reps[idx]).norm() < tol) {
          covered = true;
          break;
        }
      }
    }
    if (!covered) {
      cells[key].push_back(reps.size());
      reps.push_back(p);
    }
  }
  return reps;
}

OmegaEstimate EstimateOmega(const VectorField& field, const StatePoint& x,
                            const IntegratorConfig& cfg,
                            const OmegaOptions& opts) {
  if (!(opts.transient_T > 0.0) || !(opts.window_T > 0.0)) {
    throw std::invalid_argument("estimate_omega: transient_T and window_T must be > 0");
  }
  if (!(opts.out_dt > 0.0) || !(opts.cluster_tol > 0.0)) {
    throw std::invalid_argument("estimate_omega: out_dt and cluster_tol must be > 0");
  }

  std::vector<StatePoint> window;
  try {
    const StatePoint start = Flow(field, x, opts.transient_T, cfg);
    IntegrateSampled(field, start, opts.window_T, opts.out_dt, cfg,
                     [&window](double, const StatePoint& s) {
                       window.push_back(s);
                       return true;
                     });
  } catch (const FlowError& err) {
    if (err.kind() == FlowError::Kind::kEscapedDomain) {
      throw OrbitUnboundedError(
          std::string("orbit unbounded within horizon: ") + err.what());
    }
    throw;
  }

  OmegaEstimate est;
  est.transient_T = opts.transient_T;
  est.window_T = opts.window_T;
  est.out_dt = opts.out_dt;
  est.cluster_tol = opts.cluster_tol;
  est.probe_time = opts.out_dt;
  est.window_samples = window.size();
  est.points.points = GreedyCluster(window, opts.cluster_tol);
  est.points.meta = "omega estimate: transient_T=" +
                    std::to_string(opts.transient_T) +
                    " window_T=" + std::to_string(opts.window_T) +
                    " out_dt=" + std::to_string(opts.out_dt) +
                    " cluster_tol=" + std::to_string(opts.cluster_tol) +
                    " probe_time=" + std::to_string(est.probe_time);

  FiniteSetApprox image;
  image.points.resize(est.points.points.size());
  ParallelFor(image.points.size(), [&](std::size_t i) {
    image.points[i] = Flow(field, est.points.points[i], est.probe_time, cfg);
  });
  est.invariance_defect = Hausdorff(image, est.points);
  return est;
}

AttractionVerdict ClassifyAttraction(const VectorField& field,
                                     const StatePoint& x, const CompactSet& set,
                                     const IntegratorConfig& cfg,
                                     double horizon_T, double tol,
                                     double out_dt) {
  if (!(horizon_T > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("classify_attraction: horizon_T and tol must be > 0");
  }
  AttractionVerdict verdict;
  verdict.horizon = horizon_T;
  verdict.min_distance = INFINITY;
  const double tail_start = 0.9 * horizon_T;
  bool tail_ok = true;
  bool reached_tail = false;
  bool any = false;
  try {
    IntegrateSampled(field, x, horizon_T, std::min(out_dt, horizon_T), cfg,
                     [&](double t, const StatePoint& s) {
                       const double d = set.DistanceTo(s);
                       any = true;
                       verdict.min_distance = std::min(verdict.min_distance, d);
                       verdict.final_distance = d;
                       if (t >= tail_start) {
                         reached_tail = true;
                         if (d > tol) tail_ok = false;
                       }
                       return true;
                     });
  } catch (const FlowError& err) {
    verdict.escaped = err.kind() == FlowError::Kind::kEscapedDomain;
    verdict.error = err.what();
  }
  if (!any) {
    verdict.min_distance = verdict.final_distance = set.DistanceTo(x);
  }
  if (verdict.error.empty() && reached_tail && tail_ok) {
    verdict.label = AttractionLabel::kAttracted;
  } else if (verdict.min_distance <= tol) {
    verdict.label = AttractionLabel::kWeaklyAttracted;
  } else {
    verdict.label = AttractionLabel::kNotAttractedWithinHorizon;
  }
  return verdict;
}

std::size_t RoaGrid::Count(AttractionLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      verdicts.begin(), verdicts.end(),
      [label](const AttractionVerdict& v) { return v.label == label; }));
}

std::size_t RoaGrid::errors() const {
  return static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(),
                    [](const AttractionVerdict& v) { return !v.error.empty(); }));
}

std::vector<StatePoint> GridNodes(const Box& box,
                                  const std::vector<int>& resolution) {
  const int n = static_cast<int>(box.lo.size());
  if (static_cast<int>(resolution.size()) != n) {
    throw std::invalid_argument("roa grid: one resolution per axis required");
  }
  std::size_t total = 1;
  for (int r : resolution) {
    if (r < 2) throw std::invalid_argument("roa grid: resolution must be >= 2");
    total *= static_cast<std::size_t>(r);
  }
  std::vector<StatePoint> nodes;
  nodes.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    StatePoint p(n);
    for (int k = 0; k < n; ++k) {
      // lo + span·i/(r-1) hits both ends and the midpoint exactly.
      p[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * idx[k] /
                             static_cast<double>(resolution[k] - 1);
    }
    nodes.push_back(std::move(p));
    for (int k = 0; k < n; ++k) {
      if (++idx[k] < resolution[k]) break;
      idx[k] = 0;
    }
  }
  return nodes;
}

RoaGrid ComputeRoaGrid(const VectorField& field, const CompactSet& set,
                       const CompactSet& box, const std::vector<int>& resolution,
                       const IntegratorConfig& cfg, double horizon_T, double tol,
                       double out_dt) {
  const auto* shape = std::get_if<Box>(&box.shape());
  if (shape == nullptr) throw std::invalid_argument("roa grid: region must be a box");
  if (box.dimension() != field.dimension() || set.dimension() != field.dimension()) {
    throw std::invalid_argument("roa grid: dimension mismatch");
  }
  RoaGrid grid;
  grid.box = *shape;
  grid.resolution = resolution;
  grid.nodes = GridNodes(*shape, resolution);
  grid.verdicts.resize(grid.nodes.size());
  ParallelFor(grid.nodes.size(), [&](std::size_t i) {
    try {
      grid.verdicts[i] = ClassifyAttraction(field, grid.nodes[i], set, cfg,
                                            horizon_T, tol, out_dt);
    } catch (const std::exception& err) {
      AttractionVerdict failed;
      failed.horizon = horizon_T;
      failed.error = err.what();
      failed.min_distance = failed.final_distance = INFINITY;
      grid.verdicts[i] = failed;
    }
  });
  return grid;
}

DecayCurve OmegaDistanceDecay(const VectorField& field, const StatePoint& x,
                              const IntegratorConfig& cfg, double horizon_T,
                              const OmegaOptions& opts) {
  DecayCurve curve;
  curve.omega = EstimateOmega(field, x, cfg, opts);
  const double horizon =
      horizon_T > 0.0 ? horizon_T : opts.transient_T + opts.window_T;
  const KdTree index(curve.omega.points.points);
  IntegrateSampled(field, x, horizon, std::min(opts.out_dt, horizon), cfg,
                   [&](double t, const StatePoint& s) {
                     curve.times.push_back(t);
                     curve.distances.push_back(index.Nearest(s).distance);
                     return true;
                   });
  return curve;
}

}  // namespace lyapset
