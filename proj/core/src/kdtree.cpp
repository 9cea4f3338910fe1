#include "ddporo/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ddporo {

NnResult brute_force_query(const std::vector<Eigen::VectorXd> &points, const Eigen::VectorXd &q) {
  if (points.empty()) throw std::invalid_argument("brute_force_query: empty point list");
  if (!q.allFinite()) throw std::invalid_argument("brute_force_query: query is not finite");
  NnResult best;
  best.dist_sq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (points[i].size() != q.size())
      throw std::invalid_argument("brute_force_query: point length mismatch");
    const double d = (points[i] - q).squaredNorm();
    if (d < best.dist_sq) {
      best.dist_sq = d;
      best.index = i;
    }
  }
  return best;
}

KdTree KdTree::build(const std::vector<Eigen::VectorXd> &points, int leaf_capacity) {
  if (points.empty()) throw std::invalid_argument("KdTree::build: empty point list");
  if (leaf_capacity < 1) throw std::invalid_argument("KdTree::build: leaf capacity must be >= 1");
  KdTree t;
  t.dim_ = static_cast<int>(points[0].size());
  t.leaf_capacity_ = leaf_capacity;
  if (t.dim_ == 0) throw std::invalid_argument("KdTree::build: zero-length points");
  for (const auto &p : points) {
    if (static_cast<int>(p.size()) != t.dim_)
      throw std::invalid_argument("KdTree::build: point length mismatch");
    if (!p.allFinite()) throw std::invalid_argument("KdTree::build: point is not finite");
  }

  const int n = static_cast<int>(points.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  t.nodes_.reserve(static_cast<std::size_t>(2 * n / leaf_capacity + 2));
  t.root_ = t.build_range(points, perm, 0, n, 1);

  t.index_ = std::move(perm);
  t.coords_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(t.dim_));
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd &p = points[static_cast<std::size_t>(t.index_[static_cast<std::size_t>(i)])];
    for (int d = 0; d < t.dim_; ++d)
      t.coords_[static_cast<std::size_t>(i) * static_cast<std::size_t>(t.dim_) +
                static_cast<std::size_t>(d)] = p[d];
  }
  return t;
}

int KdTree::build_range(const std::vector<Eigen::VectorXd> &points, std::vector<int> &perm, int lo,
                        int hi, int level) {
  depth_ = std::max(depth_, level);
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  const int count = hi - lo;
  bool leaf = count <= leaf_capacity_;
  int axis = 0;
  if (!leaf) {
    // Split along the axis of largest spread; a degenerate range where every
    // coordinate coincides cannot be split and becomes an oversized leaf.
    double best_spread = -1.0;
    for (int d = 0; d < dim_; ++d) {
      double mn = points[static_cast<std::size_t>(perm[static_cast<std::size_t>(lo)])][d];
      double mx = mn;
      for (int i = lo + 1; i < hi; ++i) {
        const double v = points[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])][d];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) {
        best_spread = mx - mn;
        axis = d;
      }
    }
    if (best_spread <= 0.0) leaf = true;
  }

  if (leaf) {
    Node &nd = nodes_[static_cast<std::size_t>(node_id)];
    nd.axis = -1;
    nd.begin = lo;
    nd.end = hi;
    return node_id;
  }

  const int mid = lo + count / 2;
  std::nth_element(perm.begin() + lo, perm.begin() + mid, perm.begin() + hi,
                   [&points, axis](int a, int b) {
                     const double pa = points[static_cast<std::size_t>(a)][axis];
                     const double pb = points[static_cast<std::size_t>(b)][axis];
                     if (pa != pb) return pa < pb;
                     return a < b;  // stable order for equal coordinates
                   });
  const double split = points[static_cast<std::size_t>(perm[static_cast<std::size_t>(mid)])][axis];

  const int left = build_range(points, perm, lo, mid, level + 1);
  const int right = build_range(points, perm, mid, hi, level + 1);
  Node &nd = nodes_[static_cast<std::size_t>(node_id)];
  nd.axis = axis;
  nd.split = split;
  nd.left = left;
  nd.right = right;
  return node_id;
}

void KdTree::search(int node_id, const double *q, NnResult &best) const {
  const Node &nd = nodes_[static_cast<std::size_t>(node_id)];
  if (nd.axis < 0) {
    const double *base = coords_.data() + static_cast<std::size_t>(nd.begin) * static_cast<std::size_t>(dim_);
    for (int i = nd.begin; i < nd.end; ++i, base += dim_) {
      double d = 0.0;
      for (int k = 0; k < dim_; ++k) {
        const double diff = base[k] - q[k];
        d += diff * diff;
      }
      const int orig = index_[static_cast<std::size_t>(i)];
      if (d < best.dist_sq || (d == best.dist_sq && orig < best.index)) {
        best.dist_sq = d;
        best.index = orig;
      }
    }
    return;
  }

  const double delta = q[nd.axis] - nd.split;
  const int near = delta < 0.0 ? nd.left : nd.right;
  const int far = delta < 0.0 ? nd.right : nd.left;
  search(near, q, best);
  // Visit the far side unless it is strictly outside the best ball; equality
  // must still be visited so index ties are decided globally.
  if (delta * delta <= best.dist_sq) search(far, q, best);
}

NnResult KdTree::query_raw(const double *q) const {
  if (empty()) throw std::invalid_argument("KdTree::query: empty tree");
  NnResult best;
  best.index = std::numeric_limits<int>::max();
  best.dist_sq = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

NnResult KdTree::query(const Eigen::VectorXd &q) const {
  if (empty()) throw std::invalid_argument("KdTree::query: empty tree");
  if (static_cast<int>(q.size()) != dim_)
    throw std::invalid_argument("KdTree::query: query length mismatch");
  if (!q.allFinite()) throw std::invalid_argument("KdTree::query: query is not finite");
  return query_raw(q.data());
}

}  // namespace ddporo
