#ifndef HMBEM_QUADRATURE_HPP
#define HMBEM_QUADRATURE_HPP

#include <array>
#include <vector>

#include "hmbem/types.hpp"

namespace hmbem {

// Quadrature rule on the reference triangle {(a,b) : a,b >= 0, a+b <= 1}.
// Weights are positive and sum to the reference measure 1/2, so that
//   \int_tau f ds = 2*area(tau) * sum_i w[i] * f(chi(p[i])).
struct QuadratureRule {
  Mat points;  // n x 2 reference coordinates
  Vec weights;
  int order = 0;
};

// Symmetric positive rule exact for polynomials of total degree <= order.
// Supported orders: 1..6. Throws Error for anything else.
QuadratureRule gauss_rule(int order);

// n-point Gauss-Legendre rule on [0,1].
void gauss_legendre_01(int n, std::vector<Real>& x, std::vector<Real>& w);

// Relative position of a pair of triangles given by global vertex indices.
enum class PairCase { Disjoint = 0, Vertex = 1, Edge = 2, Identical = 3 };

// Classifies the pair and returns vertex rotations such that after rotating
// both index triples the shared simplex sits in the leading positions (the
// shared edge additionally requires the trial swap encoded in
// rotate_trial_vertices).
PairCase classify_pair(const std::array<int, 3>& test_tri,
                       const std::array<int, 3>& trial_tri, int& rot_test,
                       int& rot_trial);

// Vertex permutations matching classify_pair. apply as v[k] = tri[perm[k]].
std::array<int, 3> test_vertex_perm(int rot);
std::array<int, 3> trial_vertex_perm(PairCase c, int rot);

// Quadrature for the double integral over a triangle pair. Points are stored
// as reference coordinates on the rotated test (x) and trial (y) triangles:
//   \int_{tau_x} \int_{tau_y} k(x,y) ds_y ds_x
//     = 4*area_x*area_y * sum_i w[i] * k(x(xr[i]), y(yr[i])).
// Singular cases use the Sauter-Schwab relative-coordinate transforms over
// [0,1]^4 with tensorized n-point Gauss-Legendre rules; the disjoint case is
// the tensor product of two triangle rules.
struct PairRule {
  std::vector<Real> xr1, xr2, yr1, yr2, w;
};

// Cached per (case, order); order is the 1D point count for singular cases
// and the triangle-rule order for disjoint pairs. Thread-safe.
const PairRule& pair_rule(PairCase c, int order);

}  // namespace hmbem

#endif
