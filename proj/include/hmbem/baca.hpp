#ifndef HMBEM_BACA_HPP
#define HMBEM_BACA_HPP

#include "hmbem/amvm.hpp"
#include "hmbem/operators.hpp"

namespace hmbem {

enum class OperatorFamily { V = 0, K = 1, D = 2 };

struct BacaConfig {
  Real theta = 0.8;
  Real alpha = 10.0;        // inner-solve slack in the adaptive tolerance
  Real eps_baca = 1e-4;     // termination tolerance on E_k
  Real inner_tol0 = 1e-1;   // initial relative residual target
  Real inner_floor = 1e-12; // tolerance floor as a multiple of ||f||
  int lookahead_steps = 2;
  int max_outer = 60;
  int max_inner = 10000;
  bool promote_selected_only = false;  // ablation: no whole-operator promotion
  bool use_bpcg = true;                // false: general Krylov solver
};

// The Lame saddle system [V_DD, -K_ND; K_ND^T, D_NN] over shared adaptive
// leaves. With an empty Neumann part the system degenerates to V_DD t = f_D
// (reduced mode).
struct SaddleSystem {
  OperatorSet ops;
  ExprPtr vdd;
  ExprPtr knd;   // null in reduced mode
  ExprPtr dnn;   // null in reduced mode
  ExprPtr a;     // the full saddle expression (vdd in reduced mode)

  // flattened occurrence lists per saddle position, signs included
  std::vector<LeafOccurrence> occ_vdd, occ_k12, occ_k21, occ_dnn;

  int c_sp = 0;   // C_sp = max of the per-operator sparsity constants
  int depth = 0;  // L = max cluster-tree depth
  bool reduced = false;

  Index t_dim() const { return ops.layout.t_dofs(); }
  Index u_dim() const { return ops.layout.u_dofs(); }
  Index dim() const { return t_dim() + (reduced ? 0 : u_dim()); }
};

SaddleSystem assemble_saddle(std::shared_ptr<const SurfaceMesh> mesh,
                             const MaterialConfig& material,
                             const OperatorConfig& cfg);

// Restricted right-hand-side operator of the mixed system applied to the
// stacked extensions [g_N; g_D]:
//   [ -V,      M/2 + K  ]      restricted to Dirichlet-triangle rows
//   [ M'/2 - K',   -D   ]      restricted to Neumann-node rows
ExprPtr rhs_operator(const OperatorSet& ops);

struct RhsOptions {
  bool amvm = false;
  AmvmConfig amvm_cfg;
};

struct RhsResult {
  Vec f;
  AmvmReport report;  // filled in amvm mode
};

RhsResult assemble_rhs(const OperatorSet& ops, const Vec& g_neumann,
                       const Vec& g_dirichlet, const RhsOptions& opt);

// Block-Jacobi preconditioner for the single-layer block: dense leaf-cluster
// diagonal blocks of V_DD, Cholesky-factored and Ritz-scaled to sit
// spectrally below V_DD.
struct VddPreconditioner {
  std::vector<std::vector<Index>> groups;
  std::vector<Mat> blocks;
  std::vector<Eigen::LLT<Mat>> chol;
  Real eta = 1.0;

  Vec solve(const Vec& r) const;
  Vec apply(const Vec& r) const;
};

VddPreconditioner build_vdd_preconditioner(const SaddleSystem& sys);

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  Real residual = 0.0;
};

// Inner solver on the current approximation A_k: Bramble-Pasciak CG with
// fallback to preconditioned MINRES on breakdown. Stops when
// ||f - A_k x||_2 <= tol_abs.
Vec bpcg_solve(const SaddleSystem& sys, const VddPreconditioner& prec,
               const Vec& f, Real tol_abs, const Vec& x0,
               const BacaConfig& cfg, SolveStats& stats);

struct EstimatorTerm {
  OperatorFamily family = OperatorFamily::V;
  HMatrix* h = nullptr;
  int block = 0;
  Real norm_sq = 0.0;
};

struct EkResult {
  Real ek = 0.0;
  std::vector<EstimatorTerm> terms;
  Vec diff;  // (A_hat_k - A_k) x over the saddle index space
  Real tail_norm() const { return diff.norm(); }
};

// E_k^2 = sum over tagged blocks of ||(A_k - A_hat_k)_ts (x_k)_s||^2, with
// contributions of composed operators propagated through their sparse
// sandwiches and aggregated per underlying ACA leaf and operator family.
EkResult estimator_Ek(const SaddleSystem& sys, const Vec& x);

struct BacaIteration {
  int k = 0;
  Real ek = 0.0;
  Real tail_norm = 0.0;     // ||(A_k - A_hat_k) x_k||
  Real residual = 0.0;      // ||f - A_k x_k|| on return of the inner solve
  Real inner_tol = 0.0;
  int inner_iterations = 0;
  bool used_fallback = false;
  int marked_v = 0, marked_k = 0, marked_d = 0;
  std::vector<int> phases;  // refinement phases applied, in order (1,2,3)
  Real storage_mb = 0.0;
  Real wall_time_s = 0.0;
};

struct BacaReport {
  std::vector<BacaIteration> iterations;
  bool converged = false;
  std::string termination;
};

std::pair<Vec, BacaReport> baca_solve(SaddleSystem& sys, const Vec& f,
                                      const BacaConfig& cfg);

// ---- interior evaluation ----------------------------------------------

struct InteriorEvalConfig {
  bool amvm = false;
  AmvmConfig amvm_cfg;
  Real eps_aca = 1e-6;
  int lookahead = 2;
  ClusteringConfig clustering;
  // a point must keep at least this multiple of the largest triangle
  // diameter away from the surface
  Real min_distance_factor = 0.5;
};

// Displacements at interior points from the full Cauchy data (t over all
// triangles, u over all nodes, component-major): v = V~ t - W~ u with
// collocation-type H-matrices over the evaluation points.
Vec evaluate_interior(const OperatorSet& ops, const Vec& t_total,
                      const Vec& u_total, const Mat& points,
                      const InteriorEvalConfig& cfg);

// embeds the solved unknowns into full Cauchy data
Vec embed_t_solution(const DofLayout& layout, const Vec& g_neumann,
                     const Vec& t_sol);
Vec embed_u_solution(const DofLayout& layout, const Vec& g_dirichlet,
                     const Vec& u_sol);

}  // namespace hmbem

#endif
