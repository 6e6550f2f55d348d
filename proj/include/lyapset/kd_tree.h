#pragma once

#include <cstddef>
#include <vector>

#include "lyapset/geometry.h"

namespace lyapset {

/// Static k-d tree for exact Euclidean nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(const std::vector<StatePoint>& points);

  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  /// Exact nearest member of the indexed set. The tree must be nonempty.
  Hit Nearest(const StatePoint& query) const;

  std::size_t size() const { return count_; }
  int dimension() const { return dim_; }

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  int Build(std::size_t begin, std::size_t end);
  void Search(int node, const double* q, Hit& best, double& best_sq) const;
  const double* Coords(std::size_t slot) const {
    return coords_.data() + slot * static_cast<std::size_t>(dim_);
  }

  int dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> coords_;      // row-major, permuted with order_
  std::vector<std::size_t> order_;  // slot -> original index
  std::vector<Node> nodes_;
};

}  // namespace lyapset
