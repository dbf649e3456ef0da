#ifndef HMBEM_OPERATORS_HPP
#define HMBEM_OPERATORS_HPP

#include "hmbem/expr.hpp"
#include "hmbem/kernels.hpp"

namespace hmbem {

struct ClusteringConfig {
  int b_min = 15;
  Real beta = 0.8;
};

// The fixed sparse transforms of the discrete operators. T(k,l) carries the
// boundary differential operator n_l d_k - n_k d_l applied to the nodal
// basis, constant per triangle.
struct SparseOps {
  std::shared_ptr<const SpMat> t12, t13, t23;  // scalar M x N
  std::shared_ptr<const SpMat> th;             // 3M x 3N block layout
  std::array<std::shared_ptr<const SpMat>, 3> s;  // diag3(T32/T13/T12)
  std::shared_ptr<const SpMat> mass;           // scalar M x N, area/3 pairing
  std::shared_ptr<const SpMat> mass_d3;        // 3M x 3N
};

SparseOps build_sparse_ops(const SurfaceMesh& mesh);

struct OperatorConfig {
  ClusteringConfig clustering;
  QuadratureConfig quadrature;
  Real eps_aca = 1e-6;
  int lookahead = 2;
  int max_rank = 1 << 30;
  int coarse_rank_v = -1;  // >= 0 switches the V kernels to coarse mode
  int coarse_rank_k = -1;  // same for K_Delta
  Real beta_stop = -1.0;   // ACA stopping beta; < 0 reuses clustering.beta
};

// All kernel H-matrices plus the composed discrete operators. The scalar
// V_Delta / V_kl / K_Delta leaves are shared by V_h, K_h and D_h, so
// refining a leaf refines every composite referencing it.
struct OperatorSet {
  std::shared_ptr<const SurfaceMesh> mesh;
  MaterialConfig material;
  DofLayout layout;
  std::shared_ptr<const GalerkinKernels> kernels;

  std::shared_ptr<const ClusterTree> tri_tree, node_tree;
  std::shared_ptr<const BlockPartition> p_tri;      // triangles x triangles
  std::shared_ptr<const BlockPartition> p_trinode;  // triangles x nodes

  std::shared_ptr<HMatrix> vdelta;
  std::array<std::array<std::shared_ptr<HMatrix>, 3>, 3> v;  // v[k][l] = v[l][k]
  std::shared_ptr<HMatrix> kdelta;
  SparseOps sparse;

  ExprPtr vh;  // 3M x 3M
  ExprPtr kh;  // 3M x 3N
  ExprPtr dh;  // 3N x 3N

  int c_sp_tri = 0;
  int c_sp_trinode = 0;
  int tree_depth = 0;

  Index m() const { return mesh->num_triangles(); }
  Index n() const { return mesh->num_vertices(); }
};

OperatorSet assemble_operators(std::shared_ptr<const SurfaceMesh> mesh,
                               const MaterialConfig& material,
                               const OperatorConfig& cfg);

// (1/2E)(1+nu)/(1-nu) [ (3-4nu) diag3(V_Delta) + (V_kl block grid) ]
ExprPtr compose_Vh(const OperatorSet& ops);
// diag3(K_Delta) - diag3(V_Delta) T_h + 2 mu V_h T_h
ExprPtr compose_Kh(const OperatorSet& ops);
// mu/4pi sum_k S_k' diag3(V_Delta) S_k + mu/2pi T' diag3(V_Delta) T
//   - 4 mu^2 T' V_h T + mu/4pi D'_h
ExprPtr compose_Dh(const OperatorSet& ops);

// component-major DOF index sets of the restricted operators
std::vector<Index> dirichlet_triangle_dofs(const DofLayout& layout);
std::vector<Index> neumann_node_dofs(const DofLayout& layout);

}  // namespace hmbem

#endif
