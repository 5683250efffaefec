#pragma once

#include <utility>
#include <vector>

#include "pica/types.hpp"

namespace pica {

// Exact nearest-neighbor queries over a fixed point set. Ties in distance are
// broken toward the lowest target index so results are deterministic.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points);

  // Returns (index, distance).
  std::pair<int, double> nearest(const Vec3& query) const;

  int size() const { return static_cast<int>(points_.size()); }

 private:
  struct Node {
    int point = -1;  // index into points_
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(std::vector<int>& indices, int begin, int end, int depth);
  void search(int node, const Vec3& query, int& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Per-query (index, distance) against `targets`. Throws FormatError when
// `targets` is empty.
std::vector<std::pair<int, double>> nearest_vertex(const std::vector<Vec3>& queries,
                                                   const std::vector<Vec3>& targets);

}  // namespace pica
