#include "doctest.h"
#include "hmbem/aca.hpp"
#include "oracles.hpp"

using namespace hmbem;

namespace {

std::vector<int> iota_ids(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

// two separated point clouds with the Newton kernel
Mat separated_kernel_matrix(int m, int n, unsigned seed) {
  const Vec rx = test::random_vector(3 * m, seed);
  const Vec ry = test::random_vector(3 * n, seed + 1);
  Mat a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec3 x(rx[3 * i], rx[3 * i + 1], rx[3 * i + 2]);
      const Vec3 y(8.0 + ry[3 * j], ry[3 * j + 1], ry[3 * j + 2]);
      a(i, j) = 1.0 / (x - y).norm();
    }
  return a;
}

Real dense_rel_error(const Mat& a, const LowRankFactor& f) {
  return (a - f.U * f.V.transpose()).norm() / a.norm();
}

}  // namespace

TEST_CASE("rank-1 blocks are reproduced by one cross") {
  const Vec a = test::random_vector(20, 11);
  const Vec b = test::random_vector(15, 12);
  const Mat m = a * b.transpose();
  DenseOracle oracle(m);
  const auto rows = iota_ids(20), cols = iota_ids(15);
  const BlockView view{&oracle, rows, cols};
  const LowRankFactor f = aca_run(view, 1e-8, 0.8, 100);
  CHECK(f.rank() == 1);
  CHECK((m - f.U * f.V.transpose()).norm() < 1e-12 * m.norm());
  CHECK(f.last_stop == AcaStop::Exhausted);
  CHECK(f.exhausted());
}

TEST_CASE("zero blocks exhaust with rank 0") {
  DenseOracle oracle(Mat::Zero(8, 6));
  const auto rows = iota_ids(8), cols = iota_ids(6);
  const LowRankFactor f = aca_run({&oracle, rows, cols}, 1e-6, 0.8, 100);
  CHECK(f.rank() == 0);
  CHECK(f.exhausted());
  CHECK(f.num_consumed == 8);
}

TEST_CASE("kernel block reaches the requested accuracy") {
  const Mat a = separated_kernel_matrix(30, 30, 5);
  DenseOracle oracle(a);
  const auto ids = iota_ids(30);
  const LowRankFactor f = aca_run({&oracle, ids, ids}, 1e-6, 0.8, 30);
  CHECK(dense_rel_error(a, f) <= 1e-6);
  CHECK(f.rank() <= 20);
}

TEST_CASE("pivot rows and columns interpolate exactly") {
  const Mat a = separated_kernel_matrix(25, 20, 7);
  DenseOracle oracle(a);
  const auto rows = iota_ids(25), cols = iota_ids(20);
  const LowRankFactor f = aca_run({&oracle, rows, cols}, 1e-4, 0.8, 25);
  const Mat s = f.U * f.V.transpose();
  for (const auto& [i, j] : f.pivots) {
    for (int c = 0; c < 20; ++c)
      CHECK(s(i, c) == doctest::Approx(a(i, c)).epsilon(1e-9));
    for (int r = 0; r < 25; ++r)
      CHECK(s(r, j) == doctest::Approx(a(r, j)).epsilon(1e-9));
  }
  for (int l = 0; l < f.rank(); ++l)
    CHECK(f.V(f.pivots[l].second, l) == doctest::Approx(1.0));
}

TEST_CASE("incremental Frobenius bookkeeping stays consistent") {
  const Mat a = separated_kernel_matrix(22, 28, 3);
  DenseOracle oracle(a);
  const auto rows = iota_ids(22), cols = iota_ids(28);
  const LowRankFactor f = aca_run({&oracle, rows, cols}, 1e-8, 0.8, 22);
  const Real direct = (f.U * f.V.transpose()).squaredNorm();
  CHECK(f.frob_sq == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("extension replays the from-scratch pivot sequence") {
  const Mat a = separated_kernel_matrix(30, 30, 9);
  DenseOracle oracle(a);
  const auto ids = iota_ids(30);
  const BlockView view{&oracle, ids, ids};

  const LowRankFactor once = aca_extend(empty_factor(30, 30), 6, view, 30);
  LowRankFactor twice = aca_extend(empty_factor(30, 30), 3, view, 30);
  twice = aca_extend(std::move(twice), 3, view, 30);
  REQUIRE(once.rank() == 6);
  REQUIRE(twice.rank() == 6);
  CHECK(once.pivots == twice.pivots);
  CHECK((once.U - twice.U).norm() == 0.0);
  CHECK((once.V - twice.V).norm() == 0.0);

  // deterministic: same inputs, same pivots
  const LowRankFactor again = aca_extend(empty_factor(30, 30), 6, view, 30);
  CHECK(again.pivots == once.pivots);
}

TEST_CASE("extending an exhausted factor is a no-op") {
  const Vec a = test::random_vector(10, 21);
  const Vec b = test::random_vector(10, 22);
  DenseOracle oracle(a * b.transpose());
  const auto ids = iota_ids(10);
  const BlockView view{&oracle, ids, ids};
  LowRankFactor f = aca_run(view, 1e-10, 0.8, 10);
  REQUIRE(f.exhausted());
  const int rank_before = f.rank();
  const LowRankFactor g = aca_extend(std::move(f), 3, view, 10);
  CHECK(g.rank() == rank_before);
  CHECK(g.last_stop == AcaStop::Exhausted);
}

TEST_CASE("rank-1 extension consumes the vanishing remainder") {
  const Vec a = test::random_vector(12, 31);
  const Vec b = test::random_vector(9, 32);
  DenseOracle oracle(a * b.transpose());
  const auto rows = iota_ids(12), cols = iota_ids(9);
  const BlockView view{&oracle, rows, cols};
  const LowRankFactor f = aca_extend(empty_factor(12, 9), 2, view, 12);
  CHECK(f.rank() == 1);  // second step finds only vanishing rows
  CHECK(f.exhausted());
}

TEST_CASE("increment_matvec evaluates the look-ahead tail only") {
  const Mat a = separated_kernel_matrix(24, 18, 13);
  DenseOracle oracle(a);
  const auto rows = iota_ids(24), cols = iota_ids(18);
  const BlockView view{&oracle, rows, cols};
  const LowRankFactor lo = aca_extend(empty_factor(24, 18), 2, view, 24);
  const LowRankFactor hi = aca_extend(lo, 1, view, 24);
  const Vec x = test::random_vector(18, 40);

  SUBCASE("identical factors give zero") {
    CHECK(increment_matvec(lo, lo, x).norm() == 0.0);
  }
  SUBCASE("matches the dense difference") {
    const Vec want =
        (hi.U * hi.V.transpose() - lo.U * lo.V.transpose()) * x;
    const Vec got = increment_matvec(lo, hi, x);
    CHECK((want - got).norm() <= 1e-12 * want.norm());
  }
  SUBCASE("unit vector extracts the tail column") {
    Vec e1 = Vec::Zero(18);
    e1[0] = 1.0;
    const Vec got = increment_matvec(lo, hi, e1);
    const Vec want = hi.U.col(2) * hi.V(0, 2);
    CHECK((want - got).norm() <= 1e-14);
  }
  SUBCASE("prefix mismatch is rejected") {
    LowRankFactor other = aca_extend(empty_factor(24, 18), 3, view, 24);
    other.pivots[0].first = (other.pivots[0].first + 1) % 24;
    CHECK_THROWS_AS(increment_matvec(other, hi, x), Error);
  }
}

TEST_CASE("stopping rule is sound at desk scale") {
  // when the inequality fires, the true error obeys the 3x slack bound
  for (unsigned seed : {101u, 202u, 303u, 404u}) {
    const Mat a = separated_kernel_matrix(32, 26, seed);
    DenseOracle oracle(a);
    const auto rows = iota_ids(32), cols = iota_ids(26);
    const Real eps = 1e-5;
    const LowRankFactor f = aca_run({&oracle, rows, cols}, eps, 0.8, 26);
    if (f.last_stop == AcaStop::Inequality)
      CHECK(dense_rel_error(a, f) <= 3.0 * eps);
  }
}
