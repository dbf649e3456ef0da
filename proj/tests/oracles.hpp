#ifndef HMBEM_TESTS_ORACLES_HPP
#define HMBEM_TESTS_ORACLES_HPP

#include <functional>

#include "hmbem/baca.hpp"
#include "hmbem/kernels.hpp"
#include "hmbem/operators.hpp"

namespace hmbem::test {

// In-memory meshes mirroring the shipped data files (no file I/O).
SurfaceMesh make_cube_mesh(int n);   // [-1,1]^3, labeling of the experiments
SurfaceMesh make_tetra_mesh();       // regular tetrahedron, all Dirichlet
SurfaceMesh make_beam_mesh(int n);   // double-T beam, ends Dirichlet

// Brute-force double integral over a triangle pair by recursive uniform
// subdivision with plain tensor Gauss on well-separated sub-pairs. Fully
// independent of the production coordinate transforms.
Real bruteforce_pair_integral(
    const std::array<Vec3, 3>& tri_x, const std::array<Vec3, 3>& tri_y,
    const std::function<Real(const Vec3&, const Vec3&)>& kernel,
    int max_depth = 14);

// Closed-form Newton potential of a constant density on a flat triangle,
// int_T 1/|p-y| dA_y, via the classic per-edge log/atan formula.
Real analytic_triangle_potential(const Vec3& p, const std::array<Vec3, 3>& tri);

// Reference value of the V_Delta Galerkin entry for touching pairs: the
// analytic inner potential integrated over the outer triangle with
// subdivision graded towards the trial triangle's boundary (where the inner
// potential loses smoothness).
Real vdelta_singular_oracle(const std::array<Vec3, 3>& tri_x,
                            const std::array<Vec3, 3>& tri_y, int depth = 12);

// Dense kernel matrices through the production entry functions (the same
// quadrature the H-matrices see).
Mat dense_kernel(const GalerkinKernels& kernels, const KernelId& id);

// Dense compositions of the discrete operators by plain dense algebra,
// mirroring the operator formulas independently of the expression tree.
struct DenseOperators {
  Mat vdelta;
  Mat v[3][3];
  Mat kdelta;
  Mat vh, kh, dh;
  Mat t_h;       // dense copy of the sparse transform
  Mat mass_d3;
};

DenseOperators dense_operators(const OperatorSet& ops);

Mat dense_saddle(const OperatorSet& ops, const DenseOperators& d);
Mat dense_rhs_operator(const OperatorSet& ops, const DenseOperators& d);

// manufactured boundary data: extensions that vanish on the unknown DOFs
void manufactured_data(const SurfaceMesh& mesh, const DofLayout& layout,
                       const MaterialConfig& m, const Vec3& p, const Vec3& a,
                       Vec& g_neumann, Vec& g_dirichlet);

// deterministic pseudo-random vector
Vec random_vector(Index n, unsigned seed);

}  // namespace hmbem::test

#endif
