#include "hmbem/cluster.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace hmbem {

Real box_distance(const Box& a, const Box& b) {
  Vec3 gap = Vec3::Zero();
  for (int d = 0; d < 3; ++d) {
    const Real g = std::max(a.lo[d] - b.hi[d], b.lo[d] - a.hi[d]);
    gap[d] = std::max(g, 0.0);
  }
  return gap.norm();
}

bool admissible(const Box& t, const Box& s, Real beta) {
  if (beta <= 0.0) throw Error("admissible: beta must be positive");
  return std::min(t.diameter(), s.diameter()) < beta * box_distance(t, s);
}

namespace {

struct TreeBuilder {
  const std::vector<Box>& supports;
  ClusterTree& tree;
  int b_min;

  int build(int begin, int end, int level) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    ClusterNode& node = tree.nodes.back();
    node.begin = begin;
    node.end = end;
    node.level = level;
    tree.depth = std::max(tree.depth, level);
    Box box;
    for (int p = begin; p < end; ++p) box.absorb(supports[tree.perm[p]]);
    node.box = box;

    if (end - begin <= b_min) return id;

    int axis = 0;
    (box.hi - box.lo).maxCoeff(&axis);
    std::stable_sort(tree.perm.begin() + begin, tree.perm.begin() + end,
                     [&](int a, int b) {
                       return supports[a].midpoint()[axis] <
                              supports[b].midpoint()[axis];
                     });
    const int mid = begin + (end - begin + 1) / 2;  // lower half takes ties
    const int left = build(begin, mid, level + 1);
    const int right = build(mid, end, level + 1);
    tree.nodes[id].child[0] = left;
    tree.nodes[id].child[1] = right;
    return id;
  }
};

}  // namespace

ClusterTree build_cluster_tree(const std::vector<Box>& supports, int b_min) {
  if (supports.empty()) throw Error("build_cluster_tree: empty support set");
  if (b_min < 1) throw Error("build_cluster_tree: b_min must be >= 1");
  ClusterTree tree;
  tree.b_min = b_min;
  tree.perm.resize(supports.size());
  std::iota(tree.perm.begin(), tree.perm.end(), 0);
  TreeBuilder{supports, tree, b_min}.build(0, static_cast<int>(supports.size()),
                                           0);
  tree.inv_perm.resize(supports.size());
  for (std::size_t p = 0; p < tree.perm.size(); ++p)
    tree.inv_perm[tree.perm[p]] = static_cast<int>(p);
  return tree;
}

namespace {

void subdivide(const ClusterTree& rows, const ClusterTree& cols, int t, int s,
               int level, Real beta, std::vector<Block>& out) {
  const ClusterNode& rn = rows.nodes[t];
  const ClusterNode& cn = cols.nodes[s];
  if (admissible(rn.box, cn.box, beta)) {
    out.push_back({t, s, true, level});
    return;
  }
  if (rn.is_leaf() || cn.is_leaf()) {
    out.push_back({t, s, false, level});
    return;
  }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      subdivide(rows, cols, rn.child[a], cn.child[b], level + 1, beta, out);
}

}  // namespace

int BlockPartition::num_admissible() const {
  int n = 0;
  for (const auto& b : blocks) n += b.admissible ? 1 : 0;
  return n;
}

BlockPartition build_block_partition(std::shared_ptr<const ClusterTree> rows,
                                     std::shared_ptr<const ClusterTree> cols,
                                     Real beta) {
  BlockPartition p;
  p.rows = std::move(rows);
  p.cols = std::move(cols);
  p.beta = beta;
  subdivide(*p.rows, *p.cols, 0, 0, 0, beta, p.blocks);
  return p;
}

int sparsity_constant(const BlockPartition& p) {
  std::map<int, int> row_counts, col_counts;
  for (const auto& b : p.blocks) {
    ++row_counts[b.row_node];
    ++col_counts[b.col_node];
  }
  int c_sp = 0;
  for (const auto& [node, cnt] : row_counts) c_sp = std::max(c_sp, cnt);
  for (const auto& [node, cnt] : col_counts) c_sp = std::max(c_sp, cnt);
  return c_sp;
}

std::string partition_to_json(const BlockPartition& p) {
  nlohmann::json j;
  j["beta"] = p.beta;
  j["depth"] = p.tree_depth();
  j["c_sp"] = sparsity_constant(p);
  j["rows"] = p.rows->size();
  j["cols"] = p.cols->size();
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const Block& b = p.blocks[i];
    blocks.push_back({{"row_node", b.row_node},
                      {"col_node", b.col_node},
                      {"rows", p.rows->nodes[b.row_node].size()},
                      {"cols", p.cols->nodes[b.col_node].size()},
                      {"admissible", b.admissible},
                      {"level", b.level}});
  }
  return j.dump(2);
}

}  // namespace hmbem
