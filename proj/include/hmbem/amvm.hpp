#ifndef HMBEM_AMVM_HPP
#define HMBEM_AMVM_HPP

#include <string>

#include "hmbem/expr.hpp"

namespace hmbem {

struct AmvmConfig {
  Real theta = 0.7;        // marked fraction of the estimator
  Real eps_amvm = 1e-6;    // termination tolerance on gamma_k
  int lookahead_steps = 2;
  int max_iterations = 100;
};

// Signed contribution of one refinable block's look-ahead tail to
// b_hat_k - b_k, stored sparsely over the output rows it touches.
struct BlockTerm {
  HMatrix* h = nullptr;
  int block = 0;
  std::vector<Index> idx;
  std::vector<Real> val;
  Real norm_sq = 0.0;
};

struct GammaContributions {
  Real gamma = 0.0;
  Vec difference;  // b_hat_k - b_k, equals the sum of all block terms
  std::vector<BlockTerm> terms;
};

// Estimator gamma_k = ||b_k - b_hat_k||_2 with its blockwise localization,
// computed from the look-ahead tails pushed through the flattened
// occurrence list (cost proportional to the tail ranks).
GammaContributions gamma_contributions(
    const std::vector<LeafOccurrence>& occurrences, Index out_dim,
    const Vec& x);
GammaContributions gamma_contributions(const ExprPtr& op, const Vec& x);

// Row-sorted greedy marking (Algorithm 2, step 3b): walk the rows of the
// error by decreasing magnitude, add each block whose contribution at the
// row reaches (1-theta) (c_sp M N)^{-1/2} gamma, and stop as soon as
// gamma_k(P_k) <= (1-theta) gamma_k. Returns indices into g.terms and the
// final gamma_k(P_k).
std::vector<int> mark_blocks(const GammaContributions& g, Real theta,
                             int c_sp, Index m_rows, Index n_cols,
                             Real* gamma_pk_out = nullptr);

struct AmvmIteration {
  int k = 0;
  Real gamma = 0.0;
  Real gamma_pk = 0.0;   // gamma_k(P_k) after marking
  int marked = 0;
  long cumulative_pivots = 0;
  Real storage_mb = 0.0;
  Real e_hat = -1.0;     // ||b_hat_k - b_hat_{k+1}||, filled by the next pass
};

struct AmvmReport {
  std::vector<AmvmIteration> iterations;
  std::string termination;  // "tolerance" | "max_iterations"
  bool converged = false;
  int c_sp = 0;
};

// Algorithm 2. The operator must be coarse-assembled; marked blocks are
// promoted to their look-ahead and the look-ahead is rebuilt by further ACA
// steps. Returns the final product and the per-iteration record.
std::pair<Vec, AmvmReport> amvm_multiply(const ExprPtr& op, const Vec& x,
                                         const AmvmConfig& cfg);

// max sparsity constant over the distinct partitions under op
int operator_sparsity_constant(const ExprPtr& op);

}  // namespace hmbem

#endif
