#include "doctest.h"
#include "hmbem/cluster.hpp"
#include "oracles.hpp"

#include "json.hpp"

using namespace hmbem;

namespace {

std::vector<Box> point_boxes(const std::vector<Vec3>& pts) {
  std::vector<Box> boxes(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) boxes[i].absorb(pts[i]);
  return boxes;
}

std::vector<Box> cube_centroid_boxes(int n) {
  const SurfaceMesh mesh = test::make_cube_mesh(n);
  std::vector<Box> boxes(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (const Vec3& c : mesh.corners(t)) boxes[t].absorb(c);
  return boxes;
}

void check_tree_invariants(const ClusterTree& tree) {
  // children partition the parent disjointly; boxes nest
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const ClusterNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      CHECK(node.size() <= tree.b_min);
      continue;
    }
    const ClusterNode& l = tree.nodes[node.child[0]];
    const ClusterNode& r = tree.nodes[node.child[1]];
    CHECK(l.begin == node.begin);
    CHECK(l.end == r.begin);
    CHECK(r.end == node.end);
    for (int d = 0; d < 3; ++d) {
      CHECK(node.box.lo[d] <= l.box.lo[d]);
      CHECK(node.box.hi[d] >= r.box.hi[d]);
    }
  }
  // permutation round-trip
  for (int i = 0; i < tree.size(); ++i) {
    CHECK(tree.inv_perm[tree.perm[i]] == i);
    CHECK(tree.perm[tree.inv_perm[i]] == i);
  }
}

}  // namespace

TEST_CASE("cube centroid tree respects b_min") {
  auto boxes = cube_centroid_boxes(9);
  const ClusterTree tree = build_cluster_tree(boxes, 15);
  check_tree_invariants(tree);
  CHECK(tree.size() == 972);
}

TEST_CASE("single point gives a one-leaf tree") {
  const ClusterTree tree = build_cluster_tree(point_boxes({Vec3(1, 2, 3)}), 4);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.depth == 0);
  CHECK(tree.nodes[0].is_leaf());
}

TEST_CASE("collinear equispaced points split into equal leaves") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 16; ++i) pts.push_back(Vec3(i, 0, 0));
  const ClusterTree tree = build_cluster_tree(point_boxes(pts), 4);
  check_tree_invariants(tree);
  int leaves = 0;
  for (const auto& n : tree.nodes)
    if (n.is_leaf()) {
      ++leaves;
      CHECK(n.size() == 4);
    }
  CHECK(leaves == 4);
  CHECK(tree.depth == 2);
  // median split keeps the natural order of collinear points
  for (int i = 0; i < 16; ++i) CHECK(tree.perm[i] == i);
}

TEST_CASE("admissibility on boxes") {
  Box a, b;
  a.absorb(Vec3(0, 0, 0));
  a.absorb(Vec3(1, 1, 1));
  b = a;
  // identical boxes: dist = 0
  CHECK(!admissible(a, b, 0.8));

  Box c;
  c.absorb(Vec3(11, 0, 0));
  c.absorb(Vec3(12, 1, 1));
  // min diam = sqrt(3) < 0.8 * 10
  CHECK(admissible(a, c, 0.8));

  Box d;
  d.absorb(Vec3(3, 0, 0));
  d.absorb(Vec3(4, 1, 1));
  // sqrt(3) = 1.732 > 0.8 * 2
  CHECK(!admissible(a, d, 0.8));
  CHECK_THROWS_AS(admissible(a, d, 0.0), Error);
}

TEST_CASE("one-leaf trees give the single non-admissible block") {
  auto tree = std::make_shared<ClusterTree>(
      build_cluster_tree(point_boxes({Vec3(0, 0, 0), Vec3(1, 0, 0)}), 4));
  const BlockPartition p = build_block_partition(tree, tree, 0.8);
  REQUIRE(p.blocks.size() == 1);
  CHECK(!p.blocks[0].admissible);
  CHECK(sparsity_constant(p) == 1);
}

TEST_CASE("well-separated clouds give one admissible root block") {
  std::vector<Vec3> a_pts, b_pts;
  for (int i = 0; i < 8; ++i) {
    a_pts.push_back(Vec3(0.1 * i, 0, 0));
    b_pts.push_back(Vec3(100 + 0.1 * i, 0, 0));
  }
  auto ta = std::make_shared<ClusterTree>(build_cluster_tree(point_boxes(a_pts), 4));
  auto tb = std::make_shared<ClusterTree>(build_cluster_tree(point_boxes(b_pts), 4));
  const BlockPartition p = build_block_partition(ta, tb, 0.8);
  REQUIRE(p.blocks.size() == 1);
  CHECK(p.blocks[0].admissible);
}

TEST_CASE("cube partition tiles the index square") {
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(cube_centroid_boxes(9), 15));
  const BlockPartition p = build_block_partition(tree, tree, 0.8);
  long covered = 0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    covered += static_cast<long>(p.row_ids(b).size()) *
               static_cast<long>(p.col_ids(b).size());
    if (!p.blocks[b].admissible) {
      const ClusterNode& rn = p.rows->nodes[p.blocks[b].row_node];
      const ClusterNode& cn = p.cols->nodes[p.blocks[b].col_node];
      CHECK((rn.is_leaf() || cn.is_leaf()));
    }
  }
  CHECK(covered == 972L * 972L);
  CHECK(p.num_admissible() > 0);
  CHECK(p.num_admissible() < static_cast<int>(p.blocks.size()));

  // exhaustive tiling: every index pair covered exactly once
  std::vector<char> seen(972L * 972L, 0);
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (int r : p.row_ids(b))
      for (int c : p.col_ids(b)) {
        CHECK(!seen[static_cast<long>(r) * 972 + c]);
        seen[static_cast<long>(r) * 972 + c] = 1;
      }
}

TEST_CASE("increasing beta never loses admissible leaves") {
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(cube_centroid_boxes(6), 10));
  const BlockPartition p1 = build_block_partition(tree, tree, 0.8);
  const BlockPartition p2 = build_block_partition(tree, tree, 1.6);
  CHECK(p2.num_admissible() >= p1.num_admissible());
}

TEST_CASE("sparsity constant of a 2x2 regular block grid") {
  // four well-separated tight clusters of 2 points each: the trees split
  // into 2 leaves; every row leaf pairs with every column leaf
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(0.001, 0, 0), Vec3(10, 0, 0),
                           Vec3(10.001, 0, 0)};
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(point_boxes(pts), 2));
  const BlockPartition p = build_block_partition(tree, tree, 1.0);
  CHECK(sparsity_constant(p) == 2);
}

TEST_CASE("partition dump is valid json") {
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(cube_centroid_boxes(3), 8));
  const BlockPartition p = build_block_partition(tree, tree, 0.8);
  const auto j = nlohmann::json::parse(partition_to_json(p));
  CHECK(j["blocks"].size() == p.blocks.size());
  CHECK(j["c_sp"] == sparsity_constant(p));
}
