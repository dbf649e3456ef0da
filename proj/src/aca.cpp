#include "hmbem/aca.hpp"

#include <algorithm>

namespace hmbem {

Vec LowRankFactor::apply_range(int k_lo, int k_hi, const Vec& x) const {
  if (k_hi <= k_lo) return Vec::Zero(U.rows());
  return U.middleCols(k_lo, k_hi - k_lo) *
         (V.middleCols(k_lo, k_hi - k_lo).transpose() * x);
}

Vec LowRankFactor::apply_range_transposed(int k_lo, int k_hi,
                                          const Vec& x) const {
  if (k_hi <= k_lo) return Vec::Zero(V.rows());
  return V.middleCols(k_lo, k_hi - k_lo) *
         (U.middleCols(k_lo, k_hi - k_lo).transpose() * x);
}

LowRankFactor empty_factor(Index rows, Index cols) {
  LowRankFactor f;
  f.U.resize(rows, 0);
  f.V.resize(cols, 0);
  f.consumed.assign(static_cast<std::size_t>(rows), 0);
  return f;
}

bool extends(const LowRankFactor& lo, const LowRankFactor& hi) {
  if (lo.rank() > hi.rank()) return false;
  if (lo.U.rows() != hi.U.rows() || lo.V.rows() != hi.V.rows()) return false;
  for (int l = 0; l < lo.rank(); ++l)
    if (lo.pivots[l] != hi.pivots[l]) return false;
  return true;
}

namespace {

// One ACA step: consume rows until a non-vanishing pivot pair is found and
// either accept it or stop by the accuracy inequality. `stop_factor` < 0
// disables the accuracy test (fixed-step extension mode).
AcaStop aca_step(LowRankFactor& f, const BlockView& block, Real stop_factor) {
  const Index nrows = block.rows();
  const Index ncols = block.cols();
  while (true) {
    if (f.exhausted()) return AcaStop::Exhausted;

    // row pivot rule: first unconsumed row before the first accepted pivot,
    // afterwards the largest entry of the last accepted u
    int i = -1;
    if (f.rank() == 0) {
      for (Index r = 0; r < nrows; ++r)
        if (!f.consumed[r]) {
          i = static_cast<int>(r);
          break;
        }
    } else {
      Real best = -1.0;
      for (Index r = 0; r < nrows; ++r) {
        if (f.consumed[r]) continue;
        const Real mag = std::abs(f.U(r, f.rank() - 1));
        if (mag > best) {
          best = mag;
          i = static_cast<int>(r);
        }
      }
    }

    Vec v = block.row(i);
    const Real row_scale = v.cwiseAbs().maxCoeff();
    for (int l = 0; l < f.rank(); ++l) v -= f.U(i, l) * f.V.col(l);

    f.consumed[i] = 1;
    ++f.num_consumed;

    int j = 0;
    const Real pivot_mag = v.cwiseAbs().maxCoeff(&j);
    if (pivot_mag <= 1e-14 * row_scale || row_scale == 0.0)
      continue;  // vanishing row, try the next one

    v /= v(j);
    Vec u = block.col(j);
    for (int l = 0; l < f.rank(); ++l) u -= f.V(j, l) * f.U.col(l);

    if (stop_factor >= 0.0 &&
        u.norm() * v.norm() <= stop_factor * f.frob())
      return AcaStop::Inequality;

    // ||S_k||_F^2 = ||S_{k-1}||_F^2 + 2 sum_l (u.u_l)(v.v_l) + ||u||^2||v||^2
    Real cross = 0.0;
    for (int l = 0; l < f.rank(); ++l)
      cross += u.dot(f.U.col(l)) * v.dot(f.V.col(l));
    f.frob_sq += 2.0 * cross + u.squaredNorm() * v.squaredNorm();

    const int k = f.rank();
    f.U.conservativeResize(Eigen::NoChange, k + 1);
    f.V.conservativeResize(Eigen::NoChange, k + 1);
    f.U.col(k) = u;
    f.V.col(k) = v;
    f.pivots.emplace_back(i, j);
    return AcaStop::None;
  }
}

}  // namespace

LowRankFactor aca_run(const BlockView& block, Real eps, Real beta,
                      int max_rank, const LowRankFactor* start) {
  if (eps <= 0.0) throw Error("aca_run: eps must be positive");
  if (beta <= 0.0 || beta >= 1.0)
    throw Error("aca_run: beta must be in (0,1)");
  const int cap = std::min<Index>(max_rank, std::min(block.rows(), block.cols()));
  LowRankFactor f =
      start ? *start : empty_factor(block.rows(), block.cols());
  const Real stop_factor = eps * (1.0 - beta) / (1.0 + eps);
  while (f.rank() < cap) {
    const AcaStop s = aca_step(f, block, stop_factor);
    if (s != AcaStop::None) {
      f.last_stop = s;
      return f;
    }
  }
  f.last_stop = f.exhausted() ? AcaStop::Exhausted : AcaStop::RankCap;
  return f;
}

LowRankFactor aca_extend(LowRankFactor factor, int steps,
                         const BlockView& block, int max_rank) {
  const int cap = std::min<Index>(max_rank, std::min(block.rows(), block.cols()));
  int done = 0;
  while (done < steps && factor.rank() < cap) {
    const AcaStop s = aca_step(factor, block, -1.0);
    if (s != AcaStop::None) {
      factor.last_stop = s;
      return factor;
    }
    ++done;
  }
  factor.last_stop =
      factor.exhausted() ? AcaStop::Exhausted
      : factor.rank() >= cap && done < steps ? AcaStop::RankCap
                                             : AcaStop::StepsDone;
  return factor;
}

Vec increment_matvec(const LowRankFactor& lo, const LowRankFactor& hi,
                     const Vec& x) {
  if (!extends(lo, hi))
    throw Error("increment_matvec: factors are not prefix-related");
  return hi.apply_range(lo.rank(), hi.rank(), x);
}

}  // namespace hmbem
