#include "lyapset/kd_tree.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lyapset {
namespace {

constexpr std::size_t kLeafSize = 8;

}  // namespace

KdTree::KdTree(const std::vector<StatePoint>& points)
    : dim_(points.empty() ? 0 : static_cast<int>(points.front().size())),
      count_(points.size()) {
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  coords_.reserve(count_ * static_cast<std::size_t>(dim_));
  for (const auto& p : points) {
    if (p.size() != dim_) throw GeometryError("k-d tree: mixed dimensions");
    for (int k = 0; k < dim_; ++k) coords_.push_back(p[k]);
  }
  if (count_ > 0) Build(0, count_);
}

int KdTree::Build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split along the axis of widest spread.
  int axis = 0;
  double widest = -1.0;
  for (int k = 0; k < dim_; ++k) {
    double lo = coords_[begin * dim_ + k], hi = lo;
    for (std::size_t s = begin; s < end; ++s) {
      lo = std::min(lo, coords_[s * dim_ + k]);
      hi = std::max(hi, coords_[s * dim_ + k]);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = k;
    }
  }
  if (widest <= 0.0) return id;  // all coincident

  std::vector<std::size_t> slots(end - begin);
  std::iota(slots.begin(), slots.end(), begin);
  const std::size_t mid = slots.size() / 2;
  std::nth_element(slots.begin(), slots.begin() + mid, slots.end(),
                   [&](std::size_t a, std::size_t b) {
                     return coords_[a * dim_ + axis] < coords_[b * dim_ + axis];
                   });
  // Apply the permutation to the coordinate block and the index map.
  std::vector<double> block;
  std::vector<std::size_t> ids;
  block.reserve(slots.size() * dim_);
  ids.reserve(slots.size());
  for (std::size_t s : slots) {
    block.insert(block.end(), coords_.begin() + s * dim_,
                 coords_.begin() + (s + 1) * dim_);
    ids.push_back(order_[s]);
  }
  std::copy(block.begin(), block.end(), coords_.begin() + begin * dim_);
  std::copy(ids.begin(), ids.end(), order_.begin() + begin);

  const std::size_t split_slot = begin + mid;
  nodes_[id].axis = axis;
  nodes_[id].split = coords_[split_slot * dim_ + axis];
  const int left = Build(begin, split_slot);
  const int right = Build(split_slot, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::Search(int node_id, const double* q, Hit& best,
                    double& best_sq) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t s = node.begin; s < node.end; ++s) {
      const double* c = Coords(s);
      double sq = 0.0;
      for (int k = 0; k < dim_; ++k) {
        const double diff = c[k] - q[k];
        sq += diff * diff;
      }
      if (sq < best_sq || (sq == best_sq && order_[s] < best.index)) {
        best_sq = sq;
        best.index = order_[s];
      }
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  Search(near, q, best, best_sq);
  if (delta * delta <= best_sq) Search(far, q, best, best_sq);
}

KdTree::Hit KdTree::Nearest(const StatePoint& query) const {
  if (count_ == 0) throw GeometryError("k-d tree: query on empty set");
  if (query.size() != dim_) throw GeometryError("k-d tree: dimension mismatch");
  Hit best;
  best.index = count_;
  double best_sq = INFINITY;
  Search(0, query.data(), best, best_sq);
  best.distance = std::sqrt(best_sq);
  return best;
}

}  // namespace lyapset
