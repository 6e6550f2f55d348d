#include "lyapset/geometry.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "lyapset/kd_tree.h"

namespace lyapset {
namespace {

void RequireDimension(const StatePoint& x, int n, const char* what) {
  if (x.size() != n) {
    throw GeometryError(std::string(what) + ": dimension mismatch (got " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(n) + ")");
  }
}

StatePoint RandomDirection(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  StatePoint u(n);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int k = 0; k < n; ++k) u[k] = normal(rng);
    norm = u.norm();
  }
  return u / norm;
}

double Uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// A point of M from which sampling rays are cast.
StatePoint RayBase(const CompactSet& set, std::mt19937_64& rng) {
  return std::visit(
      [&](const auto& s) -> StatePoint {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SinglePoint>) {
          return s.point;
        } else if constexpr (std::is_same_v<T, ClosedBall>) {
          return s.center;
        } else if constexpr (std::is_same_v<T, Box>) {
          StatePoint p(s.lo.size());
          for (int k = 0; k < p.size(); ++k) {
            p[k] = s.lo[k] + (s.hi[k] - s.lo[k]) * Uniform01(rng);
          }
          return p;
        } else {
          std::uniform_int_distribution<std::size_t> pick(
              0, s.points.size() - 1);
          return s.points[pick(rng)];
        }
      },
      set.shape());
}

// Walks from `base` (a member of M) along unit direction `u` until the
// distance to M equals r. The distance along the ray is continuous, zero at
// s = 0 and at least s - diam(M) beyond, so bisection brackets a crossing.
StatePoint PointAtDistance(const CompactSet& set, const StatePoint& base,
                           const StatePoint& u, double r) {
  double lo = 0.0;
  double hi = r + set.Diameter() + 1.0;
  const double resolution = 1e-12 * std::max(1.0, r);
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (set.DistanceTo(base + mid * u) < r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const StatePoint below = base + lo * u;
  const StatePoint above = base + hi * u;
  return std::abs(set.DistanceTo(below) - r) <= std::abs(set.DistanceTo(above) - r)
             ? below
             : above;
}

void RequirePositiveCount(int count, const char* what) {
  if (count < 1) throw GeometryError(std::string(what) + ": count must be >= 1");
}

}  // namespace

const char* ToString(ShellLabel label) {
  switch (label) {
    case ShellLabel::kInsideOpen:
      return "inside_open";
    case ShellLabel::kOnShell:
      return "on_shell";
    case ShellLabel::kOutsideClosed:
      return "outside_closed";
  }
  return "?";
}

void RequireFinite(const StatePoint& x, const char* what) {
  if (x.size() < 1) throw GeometryError(std::string(what) + ": empty point");
  if (!x.allFinite()) {
    throw GeometryError(std::string(what) + ": non-finite coordinate");
  }
}

CompactSet::CompactSet(Shape shape, int dimension)
    : shape_(std::move(shape)), dimension_(dimension) {
  if (const auto* cloud = std::get_if<PointCloud>(&shape_)) {
    index_ = std::make_shared<const KdTree>(cloud->points);
  }
}

CompactSet CompactSet::Point(StatePoint p) {
  RequireFinite(p, "point set");
  const int n = static_cast<int>(p.size());
  return CompactSet(SinglePoint{std::move(p)}, n);
}

CompactSet CompactSet::Cloud(std::vector<StatePoint> points) {
  if (points.empty()) throw GeometryError("point cloud: empty");
  const int n = static_cast<int>(points.front().size());
  for (const auto& p : points) {
    RequireFinite(p, "point cloud");
    RequireDimension(p, n, "point cloud");
  }
  return CompactSet(PointCloud{std::move(points)}, n);
}

CompactSet CompactSet::Ball(StatePoint center, double radius) {
  RequireFinite(center, "ball");
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw GeometryError("ball: radius must be finite and >= 0");
  }
  const int n = static_cast<int>(center.size());
  return CompactSet(ClosedBall{std::move(center), radius}, n);
}

CompactSet CompactSet::MakeBox(StatePoint lo, StatePoint hi) {
  RequireFinite(lo, "box");
  RequireFinite(hi, "box");
  RequireDimension(hi, static_cast<int>(lo.size()), "box");
  for (int k = 0; k < lo.size(); ++k) {
    if (lo[k] > hi[k]) throw GeometryError("box: lo must be <= hi");
  }
  const int n = static_cast<int>(lo.size());
  return CompactSet(Box{std::move(lo), std::move(hi)}, n);
}

std::string CompactSet::type_name() const {
  switch (shape_.index()) {
    case 0:
      return "point";
    case 1:
      return "cloud";
    case 2:
      return "ball";
    default:
      return "box";
  }
}

double CompactSet::DistanceTo(const StatePoint& x) const {
  RequireDimension(x, dimension_, "distance_to_set");
  RequireFinite(x, "distance_to_set");
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SinglePoint>) {
          return (x - s.point).norm();
        } else if constexpr (std::is_same_v<T, ClosedBall>) {
          return std::max(0.0, (x - s.center).norm() - s.radius);
        } else if constexpr (std::is_same_v<T, Box>) {
          // Distance to the clamp of x onto the box.
          double sq = 0.0;
          for (int k = 0; k < x.size(); ++k) {
            const double excess =
                std::max({s.lo[k] - x[k], 0.0, x[k] - s.hi[k]});
            sq += excess * excess;
          }
          return std::sqrt(sq);
        } else {
          return index_->Nearest(x).distance;
        }
      },
      shape_);
}

Box CompactSet::BoundingBox() const {
  return std::visit(
      [&](const auto& s) -> Box {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SinglePoint>) {
          return Box{s.point, s.point};
        } else if constexpr (std::is_same_v<T, ClosedBall>) {
          const StatePoint r = StatePoint::Constant(dimension_, s.radius);
          return Box{s.center - r, s.center + r};
        } else if constexpr (std::is_same_v<T, Box>) {
          return s;
        } else {
          StatePoint lo = s.points.front(), hi = s.points.front();
          for (const auto& p : s.points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
          }
          return Box{lo, hi};
        }
      },
      shape_);
}

double CompactSet::Diameter() const {
  if (const auto* ball = std::get_if<ClosedBall>(&shape_)) {
    return 2.0 * ball->radius;
  }
  // For the box this is exact; for a cloud it bounds the true diameter.
  const Box bb = BoundingBox();
  return (bb.hi - bb.lo).norm();
}

double DistanceToSet(const StatePoint& x, const CompactSet& set) {
  return set.DistanceTo(x);
}

ShellLabel ClassifyShell(const StatePoint& x, const CompactSet& set, double r,
                         double tol) {
  if (!(r >= 0.0)) throw GeometryError("shell_classify: r must be >= 0");
  if (!(tol > 0.0)) throw GeometryError("shell_classify: tol must be > 0");
  const double d = set.DistanceTo(x);
  if (d < r - tol) return ShellLabel::kInsideOpen;
  if (d > r + tol) return ShellLabel::kOutsideClosed;
  return ShellLabel::kOnShell;
}

FiniteSetApprox SampleShell(const CompactSet& set, double r, int count,
                            std::uint64_t seed) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw GeometryError("sample_shell: r must be finite and > 0");
  }
  RequirePositiveCount(count, "sample_shell");
  std::mt19937_64 rng(seed);
  FiniteSetApprox out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const StatePoint base = RayBase(set, rng);
    const StatePoint u = RandomDirection(set.dimension(), rng);
    out.points.push_back(PointAtDistance(set, base, u, r));
  }
  out.meta = "shell r=" + std::to_string(r) + " seed=" + std::to_string(seed);
  return out;
}

FiniteSetApprox SampleNeighborhood(const CompactSet& set, double r, int count,
                                   std::uint64_t seed) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw GeometryError("sample_neighborhood: r must be finite and > 0");
  }
  RequirePositiveCount(count, "sample_neighborhood");
  std::mt19937_64 rng(seed);
  FiniteSetApprox out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const StatePoint base = RayBase(set, rng);
    const StatePoint u = RandomDirection(set.dimension(), rng);
    // u in (0, 1): strictly inside B(M, r), never on M itself.
    double frac = 0.0;
    while (frac <= 0.0) frac = Uniform01(rng);
    out.points.push_back(PointAtDistance(set, base, u, r * frac));
  }
  out.meta = "neighborhood r=" + std::to_string(r) +
             " seed=" + std::to_string(seed);
  return out;
}

FiniteSetApprox SampleAnnulus(const CompactSet& set, double r_in, double r_out,
                              int count, std::uint64_t seed) {
  if (!(r_in >= 0.0) || !(r_out > r_in) || !std::isfinite(r_out)) {
    throw GeometryError("sample_annulus: need 0 <= r_in < r_out");
  }
  RequirePositiveCount(count, "sample_annulus");
  std::mt19937_64 rng(seed);
  FiniteSetApprox out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const StatePoint base = RayBase(set, rng);
    const StatePoint u = RandomDirection(set.dimension(), rng);
    const double frac = 1.0 - Uniform01(rng);  // (0, 1]
    const double target = r_in + (r_out - r_in) * frac;
    out.points.push_back(PointAtDistance(set, base, u, target));
  }
  out.meta = "annulus (" + std::to_string(r_in) + ", " +
             std::to_string(r_out) + "] seed=" + std::to_string(seed);
  return out;
}

FiniteSetApprox SampleMembers(const CompactSet& set, int count,
                              std::uint64_t seed) {
  RequirePositiveCount(count, "sample_members");
  std::mt19937_64 rng(seed);
  FiniteSetApprox out;
  out.points.reserve(count);
  const int n = set.dimension();
  for (int i = 0; i < count; ++i) {
    out.points.push_back(std::visit(
        [&](const auto& s) -> StatePoint {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, SinglePoint>) {
            return s.point;
          } else if constexpr (std::is_same_v<T, ClosedBall>) {
            return s.center + s.radius * RandomDirection(n, rng);
          } else if constexpr (std::is_same_v<T, Box>) {
            StatePoint p(n);
            for (int k = 0; k < n; ++k) {
              p[k] = s.lo[k] + (s.hi[k] - s.lo[k]) * Uniform01(rng);
            }
            // Pin one coordinate to a face.
            std::uniform_int_distribution<int> axis(0, n - 1);
            const int k = axis(rng);
            p[k] = Uniform01(rng) < 0.5 ? s.lo[k] : s.hi[k];
            return p;
          } else {
            std::uniform_int_distribution<std::size_t> pick(
                0, s.points.size() - 1);
            return s.points[pick(rng)];
          }
        },
        set.shape()));
  }
  out.meta = "members of " + set.type_name() + " seed=" + std::to_string(seed);
  return out;
}

double Hausdorff(const FiniteSetApprox& a, const FiniteSetApprox& b) {
  if (a.points.empty() || b.points.empty()) {
    throw GeometryError("hausdorff: empty input");
  }
  if (a.dimension() != b.dimension()) {
    throw GeometryError("hausdorff: dimension mismatch");
  }
  const auto directed = [](const FiniteSetApprox& from,
                           const FiniteSetApprox& to) {
    const KdTree index(to.points);
    double worst = 0.0;
    for (const auto& p : from.points) {
      worst = std::max(worst, index.Nearest(p).distance);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace lyapset
