#include "hmbem/hmatrix.hpp"

#include "hmbem/parallel.hpp"

namespace hmbem {

HMatrix::HMatrix(std::shared_ptr<const BlockPartition> partition,
                 std::shared_ptr<const EntryOracle> oracle,
                 AssemblyConfig cfg)
    : partition_(std::move(partition)),
      oracle_(std::move(oracle)),
      cfg_(std::move(cfg)) {
  if (oracle_->rows() != rows() || oracle_->cols() != cols())
    throw DimensionError("HMatrix: oracle does not cover the index range");
  blocks_.resize(partition_->blocks.size());
}

BlockView HMatrix::block_view(int b) const {
  return {oracle_.get(), partition_->row_ids(b), partition_->col_ids(b)};
}

Vec HMatrix::matvec(const Vec& x, Mode mode) const {
  if (x.size() != cols()) throw DimensionError("HMatrix::matvec: size");
  const auto& rperm = partition_->rows->perm;
  const auto& cperm = partition_->cols->perm;
  Vec xi(cols());
  for (Index p = 0; p < cols(); ++p) xi[p] = x[cperm[p]];
  Vec yi = Vec::Zero(rows());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = partition_->blocks[b];
    const ClusterNode& rn = partition_->rows->nodes[blk.row_node];
    const ClusterNode& cn = partition_->cols->nodes[blk.col_node];
    const auto seg = xi.segment(cn.begin, cn.size());
    const HBlock& hb = blocks_[b];
    if (hb.is_lowrank()) {
      const int k = mode == Mode::Current ? hb.current_rank : hb.factor.rank();
      yi.segment(rn.begin, rn.size()) += hb.factor.apply_range(0, k, seg);
    } else {
      yi.segment(rn.begin, rn.size()) += hb.dense * seg;
    }
  }
  Vec y(rows());
  for (Index p = 0; p < rows(); ++p) y[rperm[p]] = yi[p];
  return y;
}

Vec HMatrix::matvec_transposed(const Vec& x, Mode mode) const {
  if (x.size() != rows())
    throw DimensionError("HMatrix::matvec_transposed: size");
  const auto& rperm = partition_->rows->perm;
  const auto& cperm = partition_->cols->perm;
  Vec xi(rows());
  for (Index p = 0; p < rows(); ++p) xi[p] = x[rperm[p]];
  Vec yi = Vec::Zero(cols());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = partition_->blocks[b];
    const ClusterNode& rn = partition_->rows->nodes[blk.row_node];
    const ClusterNode& cn = partition_->cols->nodes[blk.col_node];
    const auto seg = xi.segment(rn.begin, rn.size());
    const HBlock& hb = blocks_[b];
    if (hb.is_lowrank()) {
      const int k = mode == Mode::Current ? hb.current_rank : hb.factor.rank();
      yi.segment(cn.begin, cn.size()) +=
          hb.factor.apply_range_transposed(0, k, seg);
    } else {
      yi.segment(cn.begin, cn.size()) += hb.dense.transpose() * seg;
    }
  }
  Vec y(cols());
  for (Index p = 0; p < cols(); ++p) y[cperm[p]] = yi[p];
  return y;
}

Mat HMatrix::densify(Mode mode) const {
  Mat out = Mat::Zero(rows(), cols());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto rids = partition_->row_ids(static_cast<int>(b));
    const auto cids = partition_->col_ids(static_cast<int>(b));
    const HBlock& hb = blocks_[b];
    Mat blockm;
    if (hb.is_lowrank()) {
      const int k = mode == Mode::Current ? hb.current_rank : hb.factor.rank();
      blockm = hb.factor.U.leftCols(k) * hb.factor.V.leftCols(k).transpose();
    } else {
      blockm = hb.dense;
    }
    for (std::size_t r = 0; r < rids.size(); ++r)
      for (std::size_t c = 0; c < cids.size(); ++c)
        out(rids[r], cids[c]) = blockm(static_cast<Index>(r),
                                       static_cast<Index>(c));
  }
  return out;
}

void HMatrix::promote(int b) {
  blocks_[b].current_rank = blocks_[b].factor.rank();
}

void HMatrix::promote_all() {
  for (auto& hb : blocks_)
    if (hb.is_lowrank()) hb.current_rank = hb.factor.rank();
}

void HMatrix::extend_lookahead(int b, int steps) {
  HBlock& hb = blocks_[b];
  if (!hb.is_lowrank() || hb.factor.exhausted()) return;
  const int before = hb.factor.rank();
  hb.factor = aca_extend(std::move(hb.factor), steps, block_view(b),
                         cfg_.max_rank);
  total_pivots_ += hb.factor.rank() - before;
}

Real HMatrix::storage_mb_current() const {
  Real units = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const HBlock& hb = blocks_[b];
    if (hb.is_lowrank())
      units += static_cast<Real>(hb.current_rank) *
               (hb.factor.U.rows() + hb.factor.V.rows());
    else
      units += static_cast<Real>(hb.dense.size());
  }
  return units * 8.0 / (1 << 20);
}

Real HMatrix::storage_mb_tail() const {
  Real units = 0;
  for (const auto& hb : blocks_)
    if (hb.is_lowrank())
      units += static_cast<Real>(hb.tail_rank()) *
               (hb.factor.U.rows() + hb.factor.V.rows());
  return units * 8.0 / (1 << 20);
}

Real HMatrix::dense_equivalent_mb() const {
  return static_cast<Real>(rows()) * static_cast<Real>(cols()) * 8.0 /
         (1 << 20);
}

int HMatrix::max_current_rank() const {
  int k = 0;
  for (const auto& hb : blocks_)
    if (hb.is_lowrank()) k = std::max(k, hb.current_rank);
  return k;
}

std::shared_ptr<HMatrix> assemble(std::shared_ptr<const BlockPartition> p,
                                  std::shared_ptr<const EntryOracle> oracle,
                                  const AssemblyConfig& cfg) {
  auto h = std::make_shared<HMatrix>(std::move(p), std::move(oracle), cfg);
  auto& self = *h;
  const int nb = self.num_blocks();
  std::vector<HBlock> built(nb);
  std::atomic<long> pivots{0};
  parallel_for(nb, [&](long b) {
    const auto& part = self.partition();
    const Block& blk = part.blocks[b];
    const BlockView view = self.block_view(static_cast<int>(b));
    HBlock hb;
    if (blk.admissible) {
      LowRankFactor f;
      if (cfg.initial_rank >= 0)
        f = aca_extend(empty_factor(view.rows(), view.cols()),
                       cfg.initial_rank, view, cfg.max_rank);
      else
        f = aca_run(view, cfg.eps, cfg.beta, cfg.max_rank);
      hb.current_rank = f.rank();
      f = aca_extend(std::move(f), cfg.lookahead, view, cfg.max_rank);
      pivots += f.rank();
      hb.factor = std::move(f);
    } else {
      hb.dense.resize(view.rows(), view.cols());
      Vec r(view.cols());
      for (Index i = 0; i < view.rows(); ++i) {
        view.oracle->row(view.row_ids[i], view.col_ids, r.data());
        hb.dense.row(i) = r.transpose();
      }
      hb.current_rank = 0;
    }
    built[b] = std::move(hb);
  });
  // install built blocks (single-threaded)
  for (int b = 0; b < nb; ++b) h->install_block(b, std::move(built[b]));
  h->add_pivots(pivots.load());
  return h;
}

}  // namespace hmbem
