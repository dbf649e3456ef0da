#include <numeric>

#include "doctest.h"
#include "hmbem/expr.hpp"
#include "oracles.hpp"

using namespace hmbem;

namespace {

// Newton-kernel oracle over triangle centroids of a cube mesh
class CentroidKernelOracle : public EntryOracle {
public:
  explicit CentroidKernelOracle(const SurfaceMesh& mesh) {
    pts_.reserve(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t)
      pts_.push_back(mesh.centroids[t]);
  }
  Index rows() const override { return static_cast<Index>(pts_.size()); }
  Index cols() const override { return static_cast<Index>(pts_.size()); }
  Real entry(Index i, Index j) const override {
    if (i == j) return 2.0;  // bounded diagonal
    return 1.0 / (pts_[i] - pts_[j]).norm();
  }

private:
  std::vector<Vec3> pts_;
};

struct Fixture {
  SurfaceMesh mesh = test::make_cube_mesh(4);
  std::shared_ptr<ClusterTree> tree;
  std::shared_ptr<const BlockPartition> part;
  std::shared_ptr<CentroidKernelOracle> oracle;

  Fixture() {
    std::vector<Box> boxes(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t)
      for (const Vec3& c : mesh.corners(t)) boxes[t].absorb(c);
    tree = std::make_shared<ClusterTree>(build_cluster_tree(boxes, 10));
    part = std::make_shared<const BlockPartition>(
        build_block_partition(tree, tree, 0.8));
    oracle = std::make_shared<CentroidKernelOracle>(mesh);
  }

  Mat dense() const {
    const Index n = oracle->rows();
    Mat a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = oracle->entry(i, j);
    return a;
  }
};

}  // namespace

TEST_CASE("single non-admissible block stores the dense copy") {
  DenseOracle oracle(test::random_vector(36, 3).asDiagonal() * Mat::Ones(36, 6));
  std::vector<Box> boxes(36);
  for (int i = 0; i < 36; ++i) boxes[i].absorb(Vec3(i, 0, 0));
  std::vector<Box> cboxes(6);
  for (int i = 0; i < 6; ++i) cboxes[i].absorb(Vec3(i, 0, 0));
  auto rt = std::make_shared<ClusterTree>(build_cluster_tree(boxes, 40));
  auto ct = std::make_shared<ClusterTree>(build_cluster_tree(cboxes, 40));
  auto p = std::make_shared<const BlockPartition>(
      build_block_partition(rt, ct, 0.8));
  REQUIRE(p->blocks.size() == 1);
  auto ora = std::make_shared<DenseOracle>(oracle.matrix());
  AssemblyConfig cfg;
  cfg.name = "dense_block";
  auto h = assemble(p, ora, cfg);
  CHECK((h->densify(Mode::Current) - oracle.matrix()).norm() == 0.0);
  CHECK((h->densify(Mode::Lookahead) - oracle.matrix()).norm() == 0.0);
}

TEST_CASE("full-mode assembly approximates the dense matrix") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.eps = 1e-6;
  cfg.name = "newton";
  auto h = assemble(fx.part, fx.oracle, cfg);
  const Mat a = fx.dense();
  CHECK((h->densify(Mode::Current) - a).norm() <= 1e-5 * a.norm());

  const Vec x = test::random_vector(h->cols(), 17);
  const Vec hx = h->matvec(x, Mode::Current);
  CHECK((hx - a * x).norm() <= 1e-5 * (a * x).norm());
  const Vec hxt = h->matvec_transposed(x, Mode::Current);
  CHECK((hxt - a.transpose() * x).norm() <= 1e-5 * (a.transpose() * x).norm());
}

TEST_CASE("coarse mode caps every admissible block at the initial rank") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.initial_rank = 2;
  cfg.lookahead = 2;
  cfg.name = "coarse";
  auto h = assemble(fx.part, fx.oracle, cfg);
  bool saw_lowrank = false;
  for (int b = 0; b < h->num_blocks(); ++b) {
    const HBlock& hb = h->block(b);
    if (!hb.is_lowrank()) continue;
    saw_lowrank = true;
    CHECK(hb.current_rank <= 2);
    CHECK(hb.factor.rank() <= 4);
    if (!hb.factor.exhausted()) {
      CHECK(hb.current_rank == 2);
      CHECK(hb.factor.rank() == 4);
    }
  }
  CHECK(saw_lowrank);
}

TEST_CASE("look-ahead dominates the current approximation blockwise") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.initial_rank = 3;
  cfg.lookahead = 2;
  cfg.name = "dom";
  auto h = assemble(fx.part, fx.oracle, cfg);
  for (int b = 0; b < h->num_blocks(); ++b) {
    const HBlock& hb = h->block(b);
    if (!hb.is_lowrank()) continue;
    const auto rids = fx.part->row_ids(b);
    const auto cids = fx.part->col_ids(b);
    Mat ab(rids.size(), cids.size());
    for (std::size_t r = 0; r < rids.size(); ++r)
      for (std::size_t c = 0; c < cids.size(); ++c)
        ab(r, c) = fx.oracle->entry(rids[r], cids[c]);
    const int klo = hb.current_rank, khi = hb.factor.rank();
    const Real err_lo =
        (ab - hb.factor.U.leftCols(klo) * hb.factor.V.leftCols(klo).transpose())
            .norm();
    const Real err_hi =
        (ab - hb.factor.U.leftCols(khi) * hb.factor.V.leftCols(khi).transpose())
            .norm();
    CHECK(err_hi <= err_lo * (1.0 + 1e-12));
    if (!hb.factor.exhausted()) CHECK(err_hi < err_lo);
  }
}

TEST_CASE("permutation correctness: shuffled ordering reproduces the matrix") {
  // shuffle the external point order; densify must equal the re-indexed dense
  const int n = 60;
  Mat base(n, n);
  std::vector<Vec3> pts;
  const Vec coords = test::random_vector(3 * n, 77);
  for (int i = 0; i < n; ++i)
    pts.push_back(Vec3(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      base(i, j) = i == j ? 1.5 : 1.0 / (pts[i] - pts[j]).norm();

  std::vector<Box> boxes(n);
  for (int i = 0; i < n; ++i) boxes[i].absorb(pts[i]);
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(boxes, 8));
  auto part = std::make_shared<const BlockPartition>(
      build_block_partition(tree, tree, 1.2));
  AssemblyConfig cfg;
  cfg.eps = 1e-10;
  cfg.name = "perm";
  auto h = assemble(part, std::make_shared<DenseOracle>(base), cfg);
  CHECK((h->densify(Mode::Current) - base).norm() <= 1e-9 * base.norm());
}

TEST_CASE("expression algebra matches dense evaluation") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.eps = 1e-8;
  cfg.name = "L";
  auto h = assemble(fx.part, fx.oracle, cfg);
  const Index n = h->rows();
  const Mat a = densify(*leaf(h), Mode::Current);

  SUBCASE("identity leaf") {
    Mat id = Mat::Identity(5, 5);
    const Vec x = test::random_vector(5, 1);
    CHECK((matvec(*leaf(id), x, Mode::Current) - x).norm() == 0.0);
  }

  SUBCASE("scale of sums") {
    const ExprPtr e = scale(2.0, sum({leaf(h), leaf(h)}));
    const Vec x = test::random_vector(n, 2);
    const Vec want = 4.0 * (a * x);
    CHECK((matvec(*e, x, Mode::Current) - want).norm() <= 1e-12 * want.norm());
  }

  SUBCASE("compose and transpose") {
    SpMat d(n, n);
    std::vector<Triplet> trip;
    for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0 + 0.01 * i);
    d.setFromTriplets(trip.begin(), trip.end());
    const ExprPtr e = compose({leaf(d), transpose(leaf(h))});
    const Vec x = test::random_vector(n, 3);
    const Vec want = Mat(d) * (a.transpose() * x);
    CHECK((matvec(*e, x, Mode::Current) - want).norm() <= 1e-12 * want.norm());
    CHECK((densify(*e, Mode::Current) - Mat(d) * a.transpose()).norm() <=
          1e-12 * a.norm());
    // transpose coherence through the whole expression
    const Vec y = matvec_transposed(*e, x, Mode::Current);
    const Vec wantt = (Mat(d) * a.transpose()).transpose() * x;
    CHECK((y - wantt).norm() <= 1e-12 * wantt.norm());
  }

  SUBCASE("block grids with signs") {
    const ExprPtr e = block2x2(leaf(h), leaf(h), leaf(h), leaf(h),
                               {1.0, -1.0, 1.0, 1.0});
    Mat want(2 * n, 2 * n);
    want << a, -a, a, a;
    CHECK((densify(*e, Mode::Current) - want).norm() <= 1e-12 * want.norm());
    const Vec x = test::random_vector(2 * n, 4);
    CHECK((matvec(*e, x, Mode::Current) - want * x).norm() <=
          1e-12 * (want * x).norm());
  }

  SUBCASE("densify matvec consistency on random expressions") {
    const ExprPtr e = sum({scale(0.3, leaf(h)), transpose(leaf(h))});
    const Vec x = test::random_vector(n, 5);
    CHECK((densify(*e, Mode::Current) * x - matvec(*e, x, Mode::Current))
              .norm() <= 1e-12 * x.norm() * a.norm());
  }

  SUBCASE("densify cap") {
    CHECK_THROWS_AS(densify(*leaf(h), Mode::Current, 10), Error);
  }
}

TEST_CASE("restriction composes with selection maps") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.eps = 1e-8;
  cfg.name = "R";
  auto h = assemble(fx.part, fx.oracle, cfg);
  const Index n = h->rows();
  const Mat a = densify(*leaf(h), Mode::Current);

  std::vector<Index> rows, cols;
  for (Index i = 0; i < n; i += 3) rows.push_back(i);
  for (Index j = 1; j < n; j += 2) cols.push_back(j);
  const ExprPtr r = restrict_expr(leaf(h), rows, cols);
  const Mat sub = densify(*r, Mode::Current);
  REQUIRE(sub.rows() == static_cast<Index>(rows.size()));
  REQUIRE(sub.cols() == static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      CHECK(sub(i, j) == a(rows[i], cols[j]));

  std::vector<Index> all_rows(n), all_cols(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const Vec x = test::random_vector(n, 6);
  const ExprPtr full = restrict_expr(leaf(h), all_rows, all_cols);
  CHECK((matvec(*full, x, Mode::Current) - matvec(*leaf(h), x, Mode::Current))
            .norm() == 0.0);
  CHECK_THROWS_AS(restrict_expr(leaf(h), {}, all_cols), Error);
}

TEST_CASE("storage accounting counts current factors") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.initial_rank = 2;
  cfg.lookahead = 2;
  cfg.name = "S";
  auto h = assemble(fx.part, fx.oracle, cfg);

  Real expect_units = 0, expect_tail = 0;
  for (int b = 0; b < h->num_blocks(); ++b) {
    const HBlock& hb = h->block(b);
    const Index rows = fx.part->row_ids(b).size();
    const Index cols = fx.part->col_ids(b).size();
    if (hb.is_lowrank()) {
      expect_units += static_cast<Real>(hb.current_rank) * (rows + cols);
      expect_tail += static_cast<Real>(hb.tail_rank()) * (rows + cols);
    } else {
      expect_units += static_cast<Real>(rows) * cols;
    }
  }
  CHECK(h->storage_mb_current() ==
        doctest::Approx(expect_units * 8 / (1 << 20)));
  CHECK(h->storage_mb_tail() == doctest::Approx(expect_tail * 8 / (1 << 20)));

  const StorageReport rep = storage_report(leaf(h));
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].name == "S");
  CHECK(rep.rows[0].dense_mb ==
        doctest::Approx(8.0 * h->rows() * h->cols() / (1 << 20)));

  // 100x100 dense leaf: 0.076 MB at 100%
  DenseOracle dense_oracle(Mat::Ones(100, 100));
  std::vector<Box> boxes(100);
  for (int i = 0; i < 100; ++i) boxes[i].absorb(Vec3(i, 0, 0));
  auto tree = std::make_shared<ClusterTree>(build_cluster_tree(boxes, 128));
  auto part = std::make_shared<const BlockPartition>(
      build_block_partition(tree, tree, 0.8));
  AssemblyConfig dcfg;
  dcfg.name = "dense100";
  auto hd = assemble(part, std::make_shared<DenseOracle>(Mat::Ones(100, 100)),
                     dcfg);
  const StorageReport drep = storage_report(leaf(hd));
  CHECK(drep.rows[0].mb == doctest::Approx(0.0762939453125));
  CHECK(drep.rows[0].percent == doctest::Approx(100.0));
}

TEST_CASE("flatten pushes tails through sparse sandwiches") {
  Fixture fx;
  AssemblyConfig cfg;
  cfg.initial_rank = 2;
  cfg.lookahead = 2;
  cfg.name = "F";
  auto h = assemble(fx.part, fx.oracle, cfg);
  const Index n = h->rows();
  SpMat d(n, n);
  std::vector<Triplet> trip;
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, (i + 1) % n, 0.5 + 0.001 * i);
  d.setFromTriplets(trip.begin(), trip.end());

  const ExprPtr e =
      sum({compose({leaf(d), transpose(leaf(h)), leaf(d)}), scale(2.0, leaf(h))});
  const auto occs = flatten_occurrences(e);
  CHECK(occs.size() == 2);

  // sum of prefix * H * suffix must reproduce the expression exactly
  const Vec x = test::random_vector(n, 9);
  Vec want = matvec(*e, x, Mode::Current);
  Vec got = Vec::Zero(n);
  for (const auto& o : occs) {
    Vec xi = o.suffix ? Vec(*o.suffix * x) : x;
    Vec yi = o.transposed ? o.h->matvec_transposed(xi, Mode::Current)
                          : o.h->matvec(xi, Mode::Current);
    if (o.prefix) yi = *o.prefix * yi;
    got += o.coeff * yi;
  }
  CHECK((want - got).norm() <= 1e-13 * want.norm());

  // compose chains with two H-bearing factors are not linear
  CHECK_THROWS_AS(flatten_occurrences(compose({leaf(h), leaf(h)})), Error);
}
