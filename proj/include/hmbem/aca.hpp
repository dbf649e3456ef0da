#ifndef HMBEM_ACA_HPP
#define HMBEM_ACA_HPP

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "hmbem/types.hpp"

namespace hmbem {

// Entry generator for a matrix block. Implementations must be deterministic:
// repeated queries return identical values.
class EntryOracle {
public:
  virtual ~EntryOracle() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Real entry(Index i, Index j) const = 0;

  // bulk extraction; defaults loop over entry()
  virtual void row(Index i, std::span<const int> col_ids, Real* out) const {
    for (std::size_t k = 0; k < col_ids.size(); ++k)
      out[k] = entry(i, col_ids[k]);
  }
  virtual void col(Index j, std::span<const int> row_ids, Real* out) const {
    for (std::size_t k = 0; k < row_ids.size(); ++k)
      out[k] = entry(row_ids[k], j);
  }
};

// Dense-backed oracle, mostly for tests and desk-scale verification.
class DenseOracle : public EntryOracle {
public:
  explicit DenseOracle(Mat a) : a_(std::move(a)) {}
  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Real entry(Index i, Index j) const override { return a_(i, j); }
  const Mat& matrix() const { return a_; }

private:
  Mat a_;
};

// A block of a larger matrix addressed through external row/column ids.
struct BlockView {
  const EntryOracle* oracle = nullptr;
  std::span<const int> row_ids;
  std::span<const int> col_ids;

  Index rows() const { return static_cast<Index>(row_ids.size()); }
  Index cols() const { return static_cast<Index>(col_ids.size()); }
  Vec row(int local_i) const {
    Vec out(cols());
    oracle->row(row_ids[local_i], col_ids, out.data());
    return out;
  }
  Vec col(int local_j) const {
    Vec out(rows());
    oracle->col(col_ids[local_j], row_ids, out.data());
    return out;
  }
};

enum class AcaStop {
  None,        // still running / never stopped by a rule
  Inequality,  // ||u|| ||v|| <= eps(1-beta)/(1+eps) ||S_k||_F
  Exhausted,   // Z = t
  RankCap,     // hard max_rank reached
  StepsDone    // requested extension steps performed
};

// Resumable cross-approximation state of one block: S_k = U V^T with the
// pivot history, the consumed-row set Z and the running Frobenius norm.
struct LowRankFactor {
  Mat U;  // |t| x k
  Mat V;  // |s| x k
  std::vector<std::pair<int, int>> pivots;  // local (i_l, j_l)
  std::vector<char> consumed;               // Z as a membership mask over t
  int num_consumed = 0;
  Real frob_sq = 0.0;
  AcaStop last_stop = AcaStop::None;

  int rank() const { return static_cast<int>(pivots.size()); }
  bool exhausted() const {
    return num_consumed == static_cast<int>(consumed.size());
  }
  Real frob() const { return std::sqrt(std::max(frob_sq, 0.0)); }

  // S_k x restricted to the pivot range [k_lo, k_hi)
  Vec apply_range(int k_lo, int k_hi, const Vec& x) const;
  Vec apply_range_transposed(int k_lo, int k_hi, const Vec& x) const;
};

LowRankFactor empty_factor(Index rows, Index cols);

// True when hi was produced from lo by additional ACA steps on the same
// block (shared pivot prefix).
bool extends(const LowRankFactor& lo, const LowRankFactor& hi);

// Cross approximation with partial pivoting and the relative stopping rule
//   ||u_k||_2 ||v_k||_2 <= eps(1-beta)/(1+eps) ||S_{k-1}||_F,
// evaluated on the candidate pair before acceptance. Vanishing candidate
// rows are consumed into Z and iteration continues. Resumes from `start`
// when given.
LowRankFactor aca_run(const BlockView& block, Real eps, Real beta,
                      int max_rank, const LowRankFactor* start = nullptr);

// Extends a factor by a fixed number of accepted pivots (no accuracy test).
// Replaying from scratch for rank() + steps pivots gives the same factor.
LowRankFactor aca_extend(LowRankFactor factor, int steps,
                         const BlockView& block, int max_rank);

// (S_hi - S_lo) x computed from the tail columns only.
Vec increment_matvec(const LowRankFactor& lo, const LowRankFactor& hi,
                     const Vec& x);

}  // namespace hmbem

#endif
