#ifndef HMBEM_CLUSTER_HPP
#define HMBEM_CLUSTER_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hmbem/types.hpp"

namespace hmbem {

struct Box {
  Vec3 lo = Vec3::Constant(std::numeric_limits<Real>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<Real>::lowest());

  void absorb(const Box& other) {
    lo = lo.cwiseMin(other.lo);
    hi = hi.cwiseMax(other.hi);
  }
  void absorb(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 midpoint() const { return 0.5 * (lo + hi); }
  Real diameter() const { return (hi - lo).norm(); }
};

Real box_distance(const Box& a, const Box& b);

// Geometric admissibility: min{diam X_t, diam X_s} < beta * dist(X_t, X_s),
// evaluated on the bounding boxes of the support unions.
bool admissible(const Box& t, const Box& s, Real beta);

struct ClusterNode {
  int begin = 0;  // range [begin, end) in the permuted index array
  int end = 0;
  Box box;
  int child[2] = {-1, -1};
  int level = 0;

  int size() const { return end - begin; }
  bool is_leaf() const { return child[0] < 0; }
};

// Binary cluster tree over DOF support boxes. Splitting is geometric
// bisection: longest box axis, cut at the median of the support midpoints
// (lower half takes the extra element on ties).
struct ClusterTree {
  std::vector<ClusterNode> nodes;  // nodes[0] is the root
  std::vector<int> perm;           // internal position -> external DOF id
  std::vector<int> inv_perm;       // external DOF id -> internal position
  int b_min = 1;
  int depth = 0;

  int size() const { return static_cast<int>(perm.size()); }
  std::span<const int> indices(int node) const {
    return {perm.data() + nodes[node].begin,
            static_cast<std::size_t>(nodes[node].size())};
  }
};

ClusterTree build_cluster_tree(const std::vector<Box>& supports, int b_min);

struct Block {
  int row_node = 0;
  int col_node = 0;
  bool admissible = false;
  int level = 0;
};

// Leaves of the block-cluster tree: a tiling of I x J into admissible blocks
// and small non-admissible blocks.
struct BlockPartition {
  std::shared_ptr<const ClusterTree> rows;
  std::shared_ptr<const ClusterTree> cols;
  std::vector<Block> blocks;
  Real beta = 0.0;

  int num_admissible() const;
  // maximum depth over the two cluster trees
  int tree_depth() const { return std::max(rows->depth, cols->depth); }
  std::span<const int> row_ids(int b) const {
    return rows->indices(blocks[b].row_node);
  }
  std::span<const int> col_ids(int b) const {
    return cols->indices(blocks[b].col_node);
  }
};

BlockPartition build_block_partition(std::shared_ptr<const ClusterTree> rows,
                                     std::shared_ptr<const ClusterTree> cols,
                                     Real beta);

// Maximum number of partition blocks sharing one row or column cluster.
int sparsity_constant(const BlockPartition& p);

// Block list with flags and levels, for debugging and test fixtures.
std::string partition_to_json(const BlockPartition& p);

}  // namespace hmbem

#endif
