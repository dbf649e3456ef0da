#ifndef HMBEM_HMATRIX_HPP
#define HMBEM_HMATRIX_HPP

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "hmbem/aca.hpp"
#include "hmbem/cluster.hpp"

namespace hmbem {

// Which of the two simultaneously stored approximations to evaluate. The
// look-ahead approximation shares the pivot prefix of the current one and is
// a fixed number of ACA steps ahead; on non-admissible (dense) blocks both
// coincide with the exact block.
enum class Mode { Current, Lookahead };

struct AssemblyConfig {
  Real eps = 1e-6;       // blockwise ACA accuracy (full mode)
  Real beta = 0.8;       // stopping-rule constant, usually the partition beta
  int initial_rank = -1; // >= 0 selects coarse mode with this many pivots
  int lookahead = 2;
  int max_rank = 1 << 30;
  std::string name;
};

// One partition leaf: either a resumable ACA state (admissible) or a dense
// entry array.
struct HBlock {
  LowRankFactor factor;  // full pivot history, rank = look-ahead rank
  int current_rank = 0;
  Mat dense;             // non-admissible payload

  bool is_lowrank() const { return dense.size() == 0; }
  int lookahead_rank() const { return factor.rank(); }
  int tail_rank() const { return factor.rank() - current_rank; }
};

class HMatrix {
public:
  HMatrix(std::shared_ptr<const BlockPartition> partition,
          std::shared_ptr<const EntryOracle> oracle, AssemblyConfig cfg);

  Index rows() const { return partition_->rows->size(); }
  Index cols() const { return partition_->cols->size(); }
  const std::string& name() const { return cfg_.name; }
  const BlockPartition& partition() const { return *partition_; }
  const AssemblyConfig& config() const { return cfg_; }

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const HBlock& block(int b) const { return blocks_[b]; }
  BlockView block_view(int b) const;

  Vec matvec(const Vec& x, Mode mode) const;
  Vec matvec_transposed(const Vec& x, Mode mode) const;
  Mat densify(Mode mode) const;

  // per-block refinement (exclusive access per block required)
  void promote(int b);                  // current := look-ahead
  void extend_lookahead(int b, int steps);
  void promote_all();

  // assembly plumbing
  void install_block(int b, HBlock&& hb) { blocks_[b] = std::move(hb); }
  void add_pivots(long n) { total_pivots_ += n; }

  // accounting
  Real storage_mb_current() const;   // U,V of the current factors + dense
  Real storage_mb_tail() const;      // marginal storage of look-ahead tails
  Real dense_equivalent_mb() const;  // 8*rows*cols / 2^20
  long total_pivots() const { return total_pivots_.load(); }
  int max_current_rank() const;

private:
  std::shared_ptr<const BlockPartition> partition_;
  std::shared_ptr<const EntryOracle> oracle_;
  AssemblyConfig cfg_;
  std::vector<HBlock> blocks_;
  std::atomic<long> total_pivots_{0};
};

// Builds every block: full mode (cfg.initial_rank < 0) runs ACA to the
// stopping rule at cfg.eps, coarse mode stops after cfg.initial_rank pivots;
// both extend the look-ahead by cfg.lookahead further pivots. Parallel over
// blocks.
std::shared_ptr<HMatrix> assemble(std::shared_ptr<const BlockPartition> p,
                                  std::shared_ptr<const EntryOracle> oracle,
                                  const AssemblyConfig& cfg);

}  // namespace hmbem

#endif
