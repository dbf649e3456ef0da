#include "hmbem/amvm.hpp"

#include <algorithm>
#include <numeric>

#include "hmbem/parallel.hpp"

namespace hmbem {

namespace {

// scatter-accumulator over a fixed-size output space
struct Accum {
  Vec scratch;
  std::vector<char> hit;
  std::vector<Index> touched;

  explicit Accum(Index n) : scratch(Vec::Zero(n)), hit(n, 0) {}

  void add(Index i, Real v) {
    if (!hit[i]) {
      hit[i] = 1;
      touched.push_back(i);
    }
    scratch[i] += v;
  }

  void flush(std::vector<Index>& idx, std::vector<Real>& val) {
    std::sort(touched.begin(), touched.end());
    idx.clear();
    val.clear();
    idx.reserve(touched.size());
    val.reserve(touched.size());
    for (Index i : touched) {
      idx.push_back(i);
      val.push_back(scratch[i]);
      scratch[i] = 0.0;
      hit[i] = 0;
    }
    touched.clear();
  }
};

}  // namespace

GammaContributions gamma_contributions(
    const std::vector<LeafOccurrence>& occurrences, Index out_dim,
    const Vec& x) {
  GammaContributions g;
  g.difference = Vec::Zero(out_dim);

  // suffix vectors once per occurrence
  std::vector<Vec> xin(occurrences.size());
  for (std::size_t o = 0; o < occurrences.size(); ++o)
    xin[o] = occurrences[o].suffix ? Vec(*occurrences[o].suffix * x) : x;

  // group occurrences by H-matrix, in first-appearance order (the term
  // order feeds the marking walk and must be reproducible)
  std::vector<std::pair<HMatrix*, std::vector<int>>> by_h;
  for (std::size_t o = 0; o < occurrences.size(); ++o) {
    HMatrix* h = occurrences[o].h.get();
    auto it = std::find_if(by_h.begin(), by_h.end(),
                           [h](const auto& e) { return e.first == h; });
    if (it == by_h.end()) {
      by_h.emplace_back(h, std::vector<int>{});
      it = std::prev(by_h.end());
    }
    it->second.push_back(static_cast<int>(o));
  }

  Accum acc(out_dim);
  for (const auto& [h, occ_ids] : by_h) {
    const BlockPartition& part = h->partition();
    for (int b = 0; b < h->num_blocks(); ++b) {
      const HBlock& hb = h->block(b);
      if (!hb.is_lowrank() || hb.tail_rank() == 0) continue;
      const auto rids = part.row_ids(b);
      const auto cids = part.col_ids(b);
      const int k0 = hb.current_rank, k1 = hb.factor.rank();
      for (int oi : occ_ids) {
        const LeafOccurrence& occ = occurrences[oi];
        const Vec& xi = xin[oi];
        // gather the block input, apply the tail, scatter through the prefix
        Vec seg;
        Vec y;
        std::span<const int> out_ids;
        if (!occ.transposed) {
          seg.resize(static_cast<Index>(cids.size()));
          for (std::size_t c = 0; c < cids.size(); ++c) seg[c] = xi[cids[c]];
          y = hb.factor.apply_range(k0, k1, seg);
          out_ids = rids;
        } else {
          seg.resize(static_cast<Index>(rids.size()));
          for (std::size_t r = 0; r < rids.size(); ++r) seg[r] = xi[rids[r]];
          y = hb.factor.apply_range_transposed(k0, k1, seg);
          out_ids = cids;
        }
        if (!occ.prefix) {
          for (std::size_t r = 0; r < out_ids.size(); ++r)
            acc.add(out_ids[r], occ.coeff * y[r]);
        } else {
          const SpMat& p = *occ.prefix;
          for (std::size_t r = 0; r < out_ids.size(); ++r) {
            const Real v = occ.coeff * y[r];
            if (v == 0.0) continue;
            for (SpMat::InnerIterator it(p, out_ids[r]); it; ++it)
              acc.add(it.row(), it.value() * v);
          }
        }
      }
      BlockTerm term;
      term.h = h;
      term.block = b;
      acc.flush(term.idx, term.val);
      if (term.idx.empty()) continue;
      for (std::size_t i = 0; i < term.idx.size(); ++i) {
        g.difference[term.idx[i]] += term.val[i];
        term.norm_sq += term.val[i] * term.val[i];
      }
      g.terms.push_back(std::move(term));
    }
  }
  g.gamma = g.difference.norm();
  return g;
}

GammaContributions gamma_contributions(const ExprPtr& op, const Vec& x) {
  return gamma_contributions(flatten_occurrences(op), op->rows(), x);
}

std::vector<int> mark_blocks(const GammaContributions& g, Real theta,
                             int c_sp, Index m_rows, Index n_cols,
                             Real* gamma_pk_out) {
  std::vector<int> marked;
  if (g.gamma <= 0.0) {
    if (gamma_pk_out) *gamma_pk_out = 0.0;
    return marked;
  }
  const Real threshold =
      (1.0 - theta) * g.gamma /
      std::sqrt(static_cast<Real>(c_sp) * static_cast<Real>(m_rows) *
                static_cast<Real>(n_cols));
  const Real target = (1.0 - theta) * g.gamma;

  // per-row lists of blocks whose contribution reaches the threshold there
  std::vector<std::vector<int>> row_blocks(m_rows);
  for (std::size_t t = 0; t < g.terms.size(); ++t)
    for (std::size_t i = 0; i < g.terms[t].idx.size(); ++i)
      if (std::abs(g.terms[t].val[i]) >= threshold)
        row_blocks[g.terms[t].idx[i]].push_back(static_cast<int>(t));

  std::vector<Index> row_order(m_rows);
  std::iota(row_order.begin(), row_order.end(), 0);
  std::stable_sort(row_order.begin(), row_order.end(), [&](Index a, Index b) {
    return std::abs(g.difference[a]) > std::abs(g.difference[b]);
  });

  Vec residual = g.difference;
  Real res_sq = residual.squaredNorm();
  std::vector<char> in_set(g.terms.size(), 0);
  const Real target_sq = target * target;

  for (Index row : row_order) {
    if (res_sq <= target_sq) break;
    for (int t : row_blocks[row]) {
      if (in_set[t]) continue;
      in_set[t] = 1;
      marked.push_back(t);
      // ||r - c||^2 = ||r||^2 - 2 <r,c> + ||c||^2, touching only supp(c)
      const BlockTerm& term = g.terms[t];
      Real dot = 0.0;
      for (std::size_t i = 0; i < term.idx.size(); ++i)
        dot += residual[term.idx[i]] * term.val[i];
      res_sq += term.norm_sq - 2.0 * dot;
      for (std::size_t i = 0; i < term.idx.size(); ++i)
        residual[term.idx[i]] -= term.val[i];
      if (res_sq <= target_sq) break;
    }
  }
  // exact recomputation; the incremental update is only a running estimate
  const Real gamma_pk = residual.norm();
  if (gamma_pk_out) *gamma_pk_out = gamma_pk;
  return marked;
}

int operator_sparsity_constant(const ExprPtr& op) {
  std::vector<const BlockPartition*> parts;
  int c_sp = 1;
  for (const auto& h : collect_hmatrices(op)) {
    const BlockPartition* p = &h->partition();
    if (std::find(parts.begin(), parts.end(), p) == parts.end()) {
      parts.push_back(p);
      c_sp = std::max(c_sp, sparsity_constant(*p));
    }
  }
  return c_sp;
}

std::pair<Vec, AmvmReport> amvm_multiply(const ExprPtr& op, const Vec& x,
                                         const AmvmConfig& cfg) {
  if (cfg.theta <= 0.0 || cfg.theta >= 1.0)
    throw Error("amvm_multiply: theta must lie in (0,1)");
  if (cfg.eps_amvm <= 0.0)
    throw Error("amvm_multiply: eps_amvm must be positive");

  const auto occurrences = flatten_occurrences(op);
  const auto hmats = collect_hmatrices(op);
  AmvmReport report;
  report.c_sp = operator_sparsity_constant(op);

  auto cumulative_pivots = [&hmats]() {
    long p = 0;
    for (const auto& h : hmats) p += h->total_pivots();
    return p;
  };
  auto storage_mb = [&hmats]() {
    Real s = 0;
    for (const auto& h : hmats) s += h->storage_mb_current();
    return s;
  };

  Vec b = matvec(*op, x, Mode::Current);
  Vec b_hat_prev;
  for (int k = 0;; ++k) {
    GammaContributions g =
        gamma_contributions(occurrences, op->rows(), x);
    if (!b_hat_prev.size()) {
      // first pass; nothing to compare against
    } else {
      report.iterations.back().e_hat = (b + g.difference - b_hat_prev).norm();
    }
    AmvmIteration it;
    it.k = k;
    it.gamma = g.gamma;
    it.cumulative_pivots = cumulative_pivots();
    it.storage_mb = storage_mb();

    if (g.gamma <= cfg.eps_amvm) {
      report.iterations.push_back(it);
      report.termination = "tolerance";
      report.converged = true;
      return {b, report};
    }
    if (k >= cfg.max_iterations) {
      report.iterations.push_back(it);
      report.termination = "max_iterations";
      report.converged = false;
      return {b, report};
    }

    Real gamma_pk = 0.0;
    const auto marked =
        mark_blocks(g, cfg.theta, report.c_sp, op->rows(), op->cols(),
                    &gamma_pk);
    it.gamma_pk = gamma_pk;
    it.marked = static_cast<int>(marked.size());
    report.iterations.push_back(it);
    b_hat_prev = b + g.difference;

    // step 4: adopt the look-ahead on marked blocks, rebuild their look-ahead
    for (int t : marked) g.terms[t].h->promote(g.terms[t].block);
    parallel_for(static_cast<long>(marked.size()), [&](long i) {
      const BlockTerm& term = g.terms[marked[i]];
      term.h->extend_lookahead(term.block, cfg.lookahead_steps);
    });
    b = matvec(*op, x, Mode::Current);
  }
}

}  // namespace hmbem
