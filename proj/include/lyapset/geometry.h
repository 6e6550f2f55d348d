#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace lyapset {

/// A point of the state space ℝⁿ with the Euclidean metric.
using StatePoint = Eigen::VectorXd;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class KdTree;

/// The four concrete shapes a compact set may take.
struct SinglePoint {
  StatePoint point;
};
struct PointCloud {
  std::vector<StatePoint> points;
};
struct ClosedBall {
  StatePoint center;
  double radius = 0.0;
};
struct Box {
  StatePoint lo;
  StatePoint hi;
};

/// A nonempty compact subset M of ℝⁿ. Instances are validated on
/// construction and immutable afterwards; copies share the point-cloud
/// search index.
class CompactSet {
 public:
  using Shape = std::variant<SinglePoint, PointCloud, ClosedBall, Box>;

  static CompactSet Point(StatePoint p);
  static CompactSet Cloud(std::vector<StatePoint> points);
  static CompactSet Ball(StatePoint center, double radius);
  static CompactSet MakeBox(StatePoint lo, StatePoint hi);

  int dimension() const { return dimension_; }
  const Shape& shape() const { return shape_; }

  /// Short tag used in serialization: "point", "cloud", "ball" or "box".
  std::string type_name() const;

  /// True for the variants whose distance is computed in closed form.
  bool is_exact() const { return !std::holds_alternative<PointCloud>(shape_); }

  /// d(x, M) = inf over y in M of |x - y|.
  double DistanceTo(const StatePoint& x) const;

  /// Upper bound on the diameter of M (exact for every variant).
  double Diameter() const;

  /// Axis-aligned bounding box of M.
  Box BoundingBox() const;

 private:
  CompactSet(Shape shape, int dimension);

  Shape shape_;
  int dimension_ = 0;
  std::shared_ptr<const KdTree> index_;
};

/// A finite stand-in for a set: Ω-limit estimates, images of sets under the
/// flow and sampled shells all travel as one of these.
struct FiniteSetApprox {
  std::vector<StatePoint> points;
  std::string meta;

  int dimension() const {
    return points.empty() ? 0 : static_cast<int>(points.front().size());
  }
};

enum class ShellLabel { kInsideOpen, kOnShell, kOutsideClosed };

const char* ToString(ShellLabel label);

/// Throws GeometryError if any coordinate is NaN or infinite.
void RequireFinite(const StatePoint& x, const char* what);

double DistanceToSet(const StatePoint& x, const CompactSet& set);

/// Locates x relative to H(M, r) = {x : d(x, M) = r} with tolerance tol.
ShellLabel ClassifyShell(const StatePoint& x, const CompactSet& set, double r,
                         double tol);

/// Draws `count` points on H(M, r). Each point is found by bisection along a
/// random ray leaving a point of M, so |d(p, M) - r| <= 1e-12 max(1, r).
FiniteSetApprox SampleShell(const CompactSet& set, double r, int count,
                            std::uint64_t seed);

/// Draws `count` points of B(M, r) at distances r·u, u uniform in (0, 1).
FiniteSetApprox SampleNeighborhood(const CompactSet& set, double r, int count,
                                   std::uint64_t seed);

/// Draws `count` points with r_in < d(p, M) <= r_out.
FiniteSetApprox SampleAnnulus(const CompactSet& set, double r_in, double r_out,
                              int count, std::uint64_t seed);

/// Draws `count` points of M itself: the point, the sphere of a ball, the
/// faces of a box, or members of a cloud.
FiniteSetApprox SampleMembers(const CompactSet& set, int count,
                              std::uint64_t seed);

/// Hausdorff distance between two nonempty finite sets.
double Hausdorff(const FiniteSetApprox& a, const FiniteSetApprox& b);

}  // namespace lyapset
