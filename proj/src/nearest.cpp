#include "pica/nearest.hpp"

#include <algorithm>
#include <limits>

namespace pica {

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) throw FormatError("KdTree: empty point set");
  std::vector<int> indices(points_.size());
  for (size_t i = 0; i < points_.size(); ++i) indices[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(indices, 0, static_cast<int>(indices.size()), 0);
}

int KdTree::build(std::vector<int>& indices, int begin, int end, int depth) {
  if (begin >= end) return -1;
  int axis = depth % 3;
  int mid = (begin + end) / 2;
  std::nth_element(indices.begin() + begin, indices.begin() + mid, indices.begin() + end,
                   [&](int a, int b) {
                     if (points_[a][axis] != points_[b][axis])
                       return points_[a][axis] < points_[b][axis];
                     return a < b;
                   });
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back({indices[mid], axis, -1, -1});
  int left = build(indices, begin, mid, depth + 1);
  int right = build(indices, mid + 1, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node, const Vec3& query, int& best, double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  double d2 = (points_[n.point] - query).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
    best = n.point;
    best_d2 = d2;
  }
  double delta = query[n.axis] - points_[n.point][n.axis];
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  search(near, query, best, best_d2);
  // Equidistant points must still be visited for the index tie-break.
  if (delta * delta <= best_d2) search(far, query, best, best_d2);
}

std::pair<int, double> KdTree::nearest(const Vec3& query) const {
  int best = std::numeric_limits<int>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

std::vector<std::pair<int, double>> nearest_vertex(const std::vector<Vec3>& queries,
                                                   const std::vector<Vec3>& targets) {
  if (targets.empty()) throw FormatError("nearest_vertex: empty target set");
  KdTree tree(targets);
  std::vector<std::pair<int, double>> out(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) out[i] = tree.nearest(queries[i]);
  return out;
}

}  // namespace pica
