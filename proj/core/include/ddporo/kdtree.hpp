// Exact nearest-neighbor search over embedded phase-space points.
//
// The tree is a balanced k-d tree: nodes split at the median along the axis
// of largest spread, points are stored permuted into contiguous leaf ranges,
// and queries return exactly the same answer as a brute-force scan,
// including the tie rule (lowest original index among equidistant points).

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ddporo {

struct NnResult {
  int index = -1;       // index into the original point list
  double dist_sq = 0.0;
};

// Linear scan in ascending index order keeping the first strict minimum.
// This is the reference answer for any nearest-neighbor query.
NnResult brute_force_query(const std::vector<Eigen::VectorXd> &points, const Eigen::VectorXd &q);

class KdTree {
 public:
  KdTree() = default;

  // Builds the tree by recursive median splits. Ranges whose points all
  // share identical coordinates become leaves regardless of capacity.
  // Throws std::invalid_argument on an empty point list, non-uniform point
  // lengths, or non-finite coordinates.
  static KdTree build(const std::vector<Eigen::VectorXd> &points, int leaf_capacity = 10);

  // Exact nearest neighbor of q. Ties resolve to the lowest original index.
  // Throws std::invalid_argument on an empty tree, a query of the wrong
  // length, or non-finite query coordinates.
  NnResult query(const Eigen::VectorXd &q) const;

  // Same, reading `dim()` doubles from a raw pointer (no validation of
  // finiteness; used on the hot path where inputs are already checked).
  NnResult query_raw(const double *q) const;

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(index_.size()); }
  int depth() const { return depth_; }
  int leaf_capacity() const { return leaf_capacity_; }
  bool empty() const { return index_.empty(); }

 private:
  struct Node {
    int axis = -1;     // -1 marks a leaf
    double split = 0.0;
    int left = -1;     // child node ids (internal nodes)
    int right = -1;
    int begin = 0;     // leaf range into the permuted storage
    int end = 0;
  };

  int build_range(const std::vector<Eigen::VectorXd> &points, std::vector<int> &perm, int lo,
                  int hi, int level);
  void search(int node_id, const double *q, NnResult &best) const;

  int dim_ = 0;
  int leaf_capacity_ = 0;
  int depth_ = 0;
  int root_ = -1;
  std::vector<Node> nodes_;
  std::vector<double> coords_;  // permuted points, point i at coords_[i * dim_]
  std::vector<int> index_;      // original index of permuted point i
};

}  // namespace ddporo
