#include "hmbem/baca.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include "hmbem/parallel.hpp"

namespace hmbem {

SaddleSystem assemble_saddle(std::shared_ptr<const SurfaceMesh> mesh,
                             const MaterialConfig& material,
                             const OperatorConfig& cfg) {
  SaddleSystem sys;
  sys.ops = assemble_operators(std::move(mesh), material, cfg);
  const DofLayout& layout = sys.ops.layout;
  if (layout.dirichlet_triangle_ids.empty())
    throw Error("assemble_saddle: empty Dirichlet part");
  const auto t_dofs = dirichlet_triangle_dofs(layout);
  sys.reduced = layout.neumann_interior_nodes.empty();

  sys.vdd = restrict_expr(sys.ops.vh, t_dofs, t_dofs);
  if (sys.reduced) {
    sys.a = sys.vdd;
  } else {
    const auto u_dofs = neumann_node_dofs(layout);
    sys.knd = restrict_expr(sys.ops.kh, t_dofs, u_dofs);
    sys.dnn = restrict_expr(sys.ops.dh, u_dofs, u_dofs);
    sys.a = block2x2(sys.vdd, sys.knd, transpose(sys.knd), sys.dnn,
                     {1.0, -1.0, 1.0, 1.0});
    sys.occ_k12 = flatten_occurrences(scale(-1.0, sys.knd));
    sys.occ_k21 = flatten_occurrences(transpose(sys.knd));
    sys.occ_dnn = flatten_occurrences(sys.dnn);
  }
  sys.occ_vdd = flatten_occurrences(sys.vdd);
  sys.c_sp = std::max(sys.ops.c_sp_tri, sys.ops.c_sp_trinode);
  sys.depth = std::max(sys.ops.tree_depth, 1);
  return sys;
}

ExprPtr rhs_operator(const OperatorSet& ops) {
  const DofLayout& layout = ops.layout;
  const ExprPtr mass = leaf(ops.sparse.mass_d3);
  const ExprPtr top = sum({scale(0.5, mass), ops.kh});
  const ExprPtr bottom =
      sum({scale(0.5, transpose(mass)), scale(-1.0, transpose(ops.kh))});
  const ExprPtr full = block2x2(scale(-1.0, ops.vh), top, bottom,
                                scale(-1.0, ops.dh));

  // restrict the output rows to [Dirichlet-triangle dofs; Neumann-node dofs]
  const Index m3 = 3 * static_cast<Index>(layout.num_triangles);
  std::vector<Index> rows = dirichlet_triangle_dofs(layout);
  for (Index u : neumann_node_dofs(layout)) rows.push_back(m3 + u);
  return compose({leaf(selection_matrix(rows, full->rows())), full});
}

RhsResult assemble_rhs(const OperatorSet& ops, const Vec& g_neumann,
                       const Vec& g_dirichlet, const RhsOptions& opt) {
  if (g_neumann.size() != 3 * ops.m() || g_dirichlet.size() != 3 * ops.n())
    throw DimensionError("assemble_rhs: boundary data size");
  Vec x(g_neumann.size() + g_dirichlet.size());
  x << g_neumann, g_dirichlet;
  const ExprPtr op = rhs_operator(ops);
  RhsResult res;
  if (opt.amvm) {
    auto [f, report] = amvm_multiply(op, x, opt.amvm_cfg);
    res.f = std::move(f);
    res.report = std::move(report);
  } else {
    res.f = matvec(*op, x, Mode::Current);
  }
  return res;
}

// ---- preconditioner -----------------------------------------------------

Vec VddPreconditioner::solve(const Vec& r) const {
  Vec z = Vec::Zero(r.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Vec sub(groups[g].size());
    for (std::size_t i = 0; i < groups[g].size(); ++i)
      sub[i] = r[groups[g][i]];
    sub = chol[g].solve(sub);
    for (std::size_t i = 0; i < groups[g].size(); ++i)
      z[groups[g][i]] = sub[i] / eta;
  }
  return z;
}

Vec VddPreconditioner::apply(const Vec& r) const {
  Vec z = Vec::Zero(r.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Vec sub(groups[g].size());
    for (std::size_t i = 0; i < groups[g].size(); ++i)
      sub[i] = r[groups[g][i]];
    sub = blocks[g] * sub;
    for (std::size_t i = 0; i < groups[g].size(); ++i)
      z[groups[g][i]] = eta * sub[i];
  }
  return z;
}

VddPreconditioner build_vdd_preconditioner(const SaddleSystem& sys) {
  const OperatorSet& ops = sys.ops;
  const DofLayout& layout = ops.layout;
  const int md = static_cast<int>(layout.dirichlet_triangle_ids.size());
  std::vector<int> rank_of_triangle(layout.num_triangles, -1);
  for (int i = 0; i < md; ++i)
    rank_of_triangle[layout.dirichlet_triangle_ids[i]] = i;

  VddPreconditioner prec;
  // groups: Dirichlet members of each cluster-tree leaf, all 3 components
  const ClusterTree& tree = *ops.tri_tree;
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf()) continue;
    std::vector<int> members;
    for (int p = node.begin; p < node.end; ++p) {
      const int t = tree.perm[p];
      if (rank_of_triangle[t] >= 0) members.push_back(t);
    }
    if (members.empty()) continue;
    std::vector<Index> dofs;
    for (int c = 0; c < 3; ++c)
      for (int t : members)
        dofs.push_back(static_cast<Index>(c) * md + rank_of_triangle[t]);

    const Real pref =
        0.5 / ops.material.E * (1.0 + ops.material.nu) / (1.0 - ops.material.nu);
    const Real diag_c = (3.0 - 4.0 * ops.material.nu);
    const int nm = static_cast<int>(members.size());
    Mat block(3 * nm, 3 * nm);
    for (int c1 = 0; c1 < 3; ++c1)
      for (int c2 = 0; c2 < 3; ++c2)
        for (int a = 0; a < nm; ++a)
          for (int b = 0; b < nm; ++b) {
            Real v = ops.kernels->vkl(c1, c2, members[a], members[b]);
            if (c1 == c2) v += diag_c * ops.kernels->vdelta(members[a],
                                                            members[b]);
            block(c1 * nm + a, c2 * nm + b) = pref * v;
          }
    prec.groups.push_back(std::move(dofs));
    prec.blocks.push_back(block);
    prec.chol.emplace_back(block);
    if (prec.chol.back().info() != Eigen::Success)
      throw Error("preconditioner: diagonal block not positive definite");
  }

  // eta = 0.5 * smallest Ritz value of C0^{-1} V_DD from a short
  // preconditioned Lanczos run, so that eta C0 stays spectrally below V_DD
  prec.eta = 1.0;
  const Index n = sys.t_dim();
  Vec x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = 0.5 + 0.5 * std::cos(static_cast<Real>(3 * i + 1));
  Vec r = x;
  Vec z = prec.solve(r);
  Vec p = z;
  Real rz = r.dot(z);
  std::vector<Real> alphas, betas;
  const int steps = 10;
  for (int it = 0; it < steps; ++it) {
    const Vec ap = matvec(*sys.vdd, p, Mode::Current);
    const Real pap = p.dot(ap);
    if (pap <= 0.0 || rz <= 0.0) break;
    const Real alpha = rz / pap;
    r -= alpha * ap;
    z = prec.solve(r);
    const Real rz_new = r.dot(z);
    alphas.push_back(alpha);
    betas.push_back(rz_new / rz);
    rz = rz_new;
    p = z + betas.back() * p;
    if (std::sqrt(std::abs(rz)) < 1e-14) break;
  }
  if (!alphas.empty()) {
    const int m = static_cast<int>(alphas.size());
    Mat tri = Mat::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      tri(j, j) = 1.0 / alphas[j];
      if (j > 0) tri(j, j) += betas[j - 1] / alphas[j - 1];
      if (j + 1 < m) {
        const Real off = std::sqrt(std::max(betas[j], 0.0)) / alphas[j];
        tri(j, j + 1) = off;
        tri(j + 1, j) = off;
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(tri);
    const Real lam_min = es.eigenvalues().minCoeff();
    if (lam_min > 0) prec.eta = 0.5 * lam_min;
  }
  return prec;
}

// ---- inner solvers ------------------------------------------------------

namespace {

// preconditioned CG for the reduced SPD system V_DD t = f
Vec pcg_spd(const SaddleSystem& sys, const VddPreconditioner& prec,
            const Vec& f, Real tol_abs, const Vec& x0, int max_iter,
            SolveStats& stats) {
  Vec x = x0;
  Vec r = f - matvec(*sys.vdd, x, Mode::Current);
  Vec z = prec.solve(r);
  Vec p = z;
  Real rz = r.dot(z);
  stats.iterations = 0;
  while (r.norm() > tol_abs && stats.iterations < max_iter) {
    const Vec ap = matvec(*sys.vdd, p, Mode::Current);
    const Real alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    z = prec.solve(r);
    const Real rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++stats.iterations;
  }
  stats.residual = r.norm();
  stats.converged = stats.residual <= tol_abs;
  return x;
}

// preconditioned MINRES on the symmetric form [-V, K; K', D], the fallback
// solver
Vec minres_solve(const SaddleSystem& sys, const VddPreconditioner& prec,
                 const Vec& f, Real tol_abs, const Vec& x0, int max_iter,
                 SolveStats& stats) {
  const Index nt = sys.t_dim();
  auto apply_sym = [&](const Vec& v) {
    Vec s = matvec(*sys.a, v, Mode::Current);
    s.head(nt) = -s.head(nt);
    return s;
  };
  auto apply_prec = [&](const Vec& v) {
    Vec z = v;
    z.head(nt) = prec.solve(v.head(nt));
    return z;
  };
  Vec b = f;
  b.head(nt) = -b.head(nt);

  Vec x = x0;
  Vec r1 = b - apply_sym(x);
  Vec y = apply_prec(r1);
  Real beta1 = r1.dot(y);
  stats.iterations = 0;
  if (beta1 < 0) throw Error("minres: preconditioner not positive definite");
  if (beta1 == 0) {
    stats.converged = true;
    stats.residual = 0.0;
    return x;
  }
  beta1 = std::sqrt(beta1);
  Real eps_ln = 0.0, dbar = 0.0, oldb = 0.0, beta = beta1, phibar = beta1;
  Real cs = -1.0, sn = 0.0;
  Vec r2 = r1, w = Vec::Zero(x.size()), w2 = Vec::Zero(x.size());
  for (int it = 0; it < max_iter && phibar > tol_abs; ++it) {
    // Lanczos
    Vec v = y / beta;
    y = apply_sym(v);
    if (it > 0) y -= (beta / oldb) * r1;
    const Real alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = apply_prec(r2);
    oldb = beta;
    Real beta_sq = r2.dot(y);
    if (beta_sq < 0) throw Error("minres: preconditioner breakdown");
    beta = std::sqrt(beta_sq);
    // QR update
    const Real oldeps = eps_ln;
    const Real delta = cs * dbar + sn * alfa;
    const Real gbar = sn * dbar - cs * alfa;
    eps_ln = sn * beta;
    dbar = -cs * beta;
    const Real gamma = std::max(std::sqrt(gbar * gbar + beta * beta), 1e-30);
    cs = gbar / gamma;
    sn = beta / gamma;
    const Real phi = cs * phibar;
    phibar = sn * phibar;
    Vec w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    ++stats.iterations;
  }
  stats.residual = (f - matvec(*sys.a, x, Mode::Current)).norm();
  stats.converged = stats.residual <= tol_abs * 1.5;
  return x;
}

// Bramble-Pasciak CG on [V, -K; -K', -D] [t;u] = [f_D; -f_N] with the
// left transform P^{-1} = [C^{-1}, 0; -K' C^{-1}, -I] and the inner product
// <x,y> = ((V - C) x_1, y_1) + x_2.y_2.
Vec bpcg_core(const SaddleSystem& sys, const VddPreconditioner& prec,
              const Vec& f, Real tol_abs, const Vec& x0, int max_iter,
              SolveStats& stats, bool& breakdown) {
  const Index nt = sys.t_dim();
  breakdown = false;

  auto apply_abar = [&](const Vec& v) {
    Vec s = matvec(*sys.a, v, Mode::Current);
    s.tail(s.size() - nt) = -s.tail(s.size() - nt);
    return s;
  };
  auto apply_ptrans = [&](const Vec& r) {
    // P^{-1} r for P = [C, 0; B, -I] with B = -K'
    Vec z(r.size());
    z.head(nt) = prec.solve(r.head(nt));
    z.tail(r.size() - nt) =
        -matvec_transposed(*sys.knd, z.head(nt), Mode::Current) -
        r.tail(r.size() - nt);
    return z;
  };
  auto h_dot = [&](const Vec& a, const Vec& b, const Vec& v_a1) {
    // v_a1 = V_DD a_1 precomputed by the caller
    return v_a1.dot(b.head(nt)) - prec.apply(a.head(nt)).dot(b.head(nt)) +
           a.tail(a.size() - nt).dot(b.tail(b.size() - nt));
  };

  Vec bbar = f;
  bbar.tail(f.size() - nt) = -bbar.tail(f.size() - nt);

  Vec x = x0;
  Vec r_orig = bbar - apply_abar(x);
  Vec rhat = apply_ptrans(r_orig);
  Vec p = rhat;
  Vec v_rhat1 = matvec(*sys.vdd, rhat.head(nt), Mode::Current);
  Real rho = h_dot(rhat, rhat, v_rhat1);
  stats.iterations = 0;
  if (rho < 0) {
    breakdown = true;
    return x;
  }
  while (r_orig.norm() > tol_abs && stats.iterations < max_iter) {
    const Vec ap = apply_abar(p);
    const Vec q = apply_ptrans(ap);
    const Vec v_q1 = matvec(*sys.vdd, q.head(nt), Mode::Current);
    const Real denom = h_dot(q, p, v_q1);
    if (denom <= 0) {
      breakdown = true;
      return x;
    }
    const Real alpha = rho / denom;
    x += alpha * p;
    r_orig -= alpha * ap;
    rhat -= alpha * q;
    v_rhat1 -= alpha * v_q1;
    const Real rho_new = h_dot(rhat, rhat, v_rhat1);
    if (rho_new < 0) {
      breakdown = true;
      return x;
    }
    p = rhat + (rho_new / rho) * p;
    rho = rho_new;
    ++stats.iterations;
  }
  stats.residual = r_orig.norm();
  stats.converged = stats.residual <= tol_abs;
  return x;
}

}  // namespace

Vec bpcg_solve(const SaddleSystem& sys, const VddPreconditioner& prec,
               const Vec& f, Real tol_abs, const Vec& x0,
               const BacaConfig& cfg, SolveStats& stats) {
  if (f.size() != sys.dim()) throw DimensionError("bpcg_solve: rhs size");
  if (f.norm() == 0.0) {
    stats = {0, true, false, 0.0};
    return Vec::Zero(f.size());
  }
  if (sys.reduced)
    return pcg_spd(sys, prec, f, tol_abs, x0, cfg.max_inner, stats);
  if (cfg.use_bpcg) {
    bool breakdown = false;
    SolveStats bp_stats;
    Vec x = bpcg_core(sys, prec, f, tol_abs, x0, cfg.max_inner, bp_stats,
                      breakdown);
    if (!breakdown) {
      stats = bp_stats;
      return x;
    }
    // loss of positivity in the BP inner product; fall back and restart
    // from the best iterate so far
    SolveStats mr_stats;
    Vec y = minres_solve(sys, prec, f, tol_abs, x, cfg.max_inner, mr_stats);
    stats = mr_stats;
    stats.iterations += bp_stats.iterations;
    stats.used_fallback = true;
    return y;
  }
  return minres_solve(sys, prec, f, tol_abs, x0, cfg.max_inner, stats);
}

// ---- estimator ----------------------------------------------------------

EkResult estimator_Ek(const SaddleSystem& sys, const Vec& x) {
  if (x.size() != sys.dim()) throw DimensionError("estimator_Ek: x size");
  EkResult res;
  const Index nt = sys.t_dim();
  const Vec xt = x.head(nt);

  res.diff = Vec::Zero(sys.dim());
  auto add_terms = [&res](const GammaContributions& g, OperatorFamily fam,
                          Index offset, std::vector<EstimatorTerm>* merge) {
    for (const auto& t : g.terms) {
      if (merge) {
        bool found = false;
        for (auto& e : *merge)
          if (e.h == t.h && e.block == t.block) {
            e.norm_sq += t.norm_sq;
            found = true;
            break;
          }
        if (found) {
          for (std::size_t i = 0; i < t.idx.size(); ++i)
            res.diff[offset + t.idx[i]] += t.val[i];
          continue;
        }
        merge->push_back({fam, t.h, t.block, t.norm_sq});
      } else {
        res.terms.push_back({fam, t.h, t.block, t.norm_sq});
      }
      for (std::size_t i = 0; i < t.idx.size(); ++i)
        res.diff[offset + t.idx[i]] += t.val[i];
    }
  };

  add_terms(gamma_contributions(sys.occ_vdd, nt, xt), OperatorFamily::V, 0,
            nullptr);
  if (!sys.reduced) {
    const Vec xu = x.tail(sys.u_dim());
    std::vector<EstimatorTerm> k_terms;
    add_terms(gamma_contributions(sys.occ_k12, nt, xu), OperatorFamily::K, 0,
              &k_terms);
    add_terms(gamma_contributions(sys.occ_k21, sys.u_dim(), xt),
              OperatorFamily::K, nt, &k_terms);
    for (auto& t : k_terms) res.terms.push_back(t);
    add_terms(gamma_contributions(sys.occ_dnn, sys.u_dim(), xu),
              OperatorFamily::D, nt, nullptr);
  }
  Real sq = 0.0;
  for (const auto& t : res.terms) sq += t.norm_sq;
  res.ek = std::sqrt(sq);
  return res;
}

// ---- the outer adaptive loop -------------------------------------------

namespace {

// Doerfler set of minimal cardinality: greedy descending prefix of the
// squared contributions until E_k(M)^2 >= theta^2 E_k^2.
std::vector<int> doerfler_mark(const EkResult& ek, Real theta) {
  std::vector<int> order(ek.terms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ek.terms[a].norm_sq > ek.terms[b].norm_sq;
  });
  const Real target = theta * theta * ek.ek * ek.ek;
  std::vector<int> marked;
  Real acc = 0.0;
  for (int t : order) {
    if (acc >= target) break;
    marked.push_back(t);
    acc += ek.terms[t].norm_sq;
  }
  return marked;
}

struct PromotionSet {
  std::set<std::pair<HMatrix*, int>> blocks;

  void add(HMatrix* h, int b) { blocks.insert({h, b}); }
  void add_all(const ExprPtr& e) {
    for (const auto& h : collect_hmatrices(e))
      for (int b = 0; b < h->num_blocks(); ++b)
        if (h->block(b).is_lowrank()) add(h.get(), b);
  }
};

}  // namespace

std::pair<Vec, BacaReport> baca_solve(SaddleSystem& sys, const Vec& f,
                                      const BacaConfig& cfg) {
  if (cfg.theta <= 0 || cfg.theta >= 1)
    throw Error("baca_solve: theta must lie in (0,1)");
  BacaReport report;
  const VddPreconditioner prec = build_vdd_preconditioner(sys);
  const Real fnorm = f.norm();
  const Real floor_abs = cfg.inner_floor * std::max(fnorm, 1e-300);
  const auto hmats = collect_hmatrices(sys.a);
  auto storage_mb = [&hmats]() {
    Real s = 0;
    for (const auto& h : hmats) s += h->storage_mb_current();
    return s;
  };

  Vec x = Vec::Zero(sys.dim());
  Real tol_abs = std::max(cfg.inner_tol0 * fnorm, floor_abs);
  const auto t_start = std::chrono::steady_clock::now();

  for (int k = 0;; ++k) {
    BacaIteration it;
    it.k = k;

    // inner solve under the adaptive accuracy condition
    // ||f - A_k x|| <= alpha ||(A_k - A_hat_k) x||
    SolveStats stats;
    EkResult ek;
    for (int round = 0; round < 6; ++round) {
      x = bpcg_solve(sys, prec, f, tol_abs, x, cfg, stats);
      it.inner_iterations += stats.iterations;
      it.used_fallback = it.used_fallback || stats.used_fallback;
      ek = estimator_Ek(sys, x);
      const Real rhs_cond = cfg.alpha * ek.tail_norm();
      if (stats.residual <= std::max(rhs_cond, floor_abs)) break;
      tol_abs = std::max(rhs_cond, floor_abs);
    }
    it.inner_tol = tol_abs;
    it.residual = stats.residual;
    it.ek = ek.ek;
    it.tail_norm = ek.tail_norm();
    it.storage_mb = storage_mb();
    it.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();

    if (ek.ek <= cfg.eps_baca) {
      report.iterations.push_back(it);
      report.converged = true;
      report.termination = "tolerance";
      return {x, report};
    }
    if (k >= cfg.max_outer) {
      report.iterations.push_back(it);
      report.termination = "max_outer";
      return {x, report};
    }

    // Doerfler marking over the family-tagged blocks
    const auto marked = doerfler_mark(ek, cfg.theta);
    bool any_d = false, any_k = false;
    for (int t : marked) {
      switch (ek.terms[t].family) {
        case OperatorFamily::V: ++it.marked_v; break;
        case OperatorFamily::K: ++it.marked_k; any_k = true; break;
        case OperatorFamily::D: ++it.marked_d; any_d = true; break;
      }
    }

    // refinement in the operator order: (i) D_NN wholly, (ii) V_DD wholly
    // plus selected K_Delta blocks, (iii) selected V blocks only
    PromotionSet promo;
    if (any_d) {
      it.phases.push_back(1);
      if (cfg.promote_selected_only) {
        for (int t : marked)
          if (ek.terms[t].family == OperatorFamily::D)
            promo.add(ek.terms[t].h, ek.terms[t].block);
      } else {
        promo.add_all(sys.dnn);
      }
    }
    if (any_k) {
      it.phases.push_back(2);
      if (!cfg.promote_selected_only) promo.add_all(sys.vdd);
      for (int t : marked)
        if (ek.terms[t].family == OperatorFamily::K)
          promo.add(ek.terms[t].h, ek.terms[t].block);
    }
    if (!any_d && !any_k) {
      it.phases.push_back(3);
      for (int t : marked) promo.add(ek.terms[t].h, ek.terms[t].block);
    } else {
      // V-family marks are covered by the whole-operator promotions above
      // unless the ablation switch is on
      if (cfg.promote_selected_only)
        for (int t : marked)
          if (ek.terms[t].family == OperatorFamily::V)
            promo.add(ek.terms[t].h, ek.terms[t].block);
    }

    std::vector<std::pair<HMatrix*, int>> todo(promo.blocks.begin(),
                                               promo.blocks.end());
    for (const auto& [h, b] : todo) h->promote(b);
    parallel_for(static_cast<long>(todo.size()), [&](long i) {
      todo[i].first->extend_lookahead(todo[i].second, cfg.lookahead_steps);
    });

    report.iterations.push_back(it);
    tol_abs = std::max(tol_abs, floor_abs);
  }
}

// ---- interior evaluation -------------------------------------------------

Vec embed_t_solution(const DofLayout& layout, const Vec& g_neumann,
                     const Vec& t_sol) {
  Vec t = g_neumann;
  const Index md = static_cast<Index>(layout.dirichlet_triangle_ids.size());
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < md; ++i)
      t[static_cast<Index>(c) * layout.num_triangles +
        layout.dirichlet_triangle_ids[i]] += t_sol[c * md + i];
  return t;
}

Vec embed_u_solution(const DofLayout& layout, const Vec& g_dirichlet,
                     const Vec& u_sol) {
  Vec u = g_dirichlet;
  const Index ni = static_cast<Index>(layout.neumann_interior_nodes.size());
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < ni; ++i)
      u[static_cast<Index>(c) * layout.num_nodes +
        layout.neumann_interior_nodes[i]] += u_sol[c * ni + i];
  return u;
}

Vec evaluate_interior(const OperatorSet& ops, const Vec& t_total,
                      const Vec& u_total, const Mat& points,
                      const InteriorEvalConfig& cfg) {
  const SurfaceMesh& mesh = *ops.mesh;
  if (t_total.size() != 3 * ops.m() || u_total.size() != 3 * ops.n())
    throw DimensionError("evaluate_interior: Cauchy data size");

  Real max_diam = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    max_diam = std::max(max_diam, mesh.triangle_diameter(t));
  const Real min_dist = cfg.min_distance_factor * max_diam;
  for (Index i = 0; i < points.rows(); ++i) {
    const Real d = mesh.distance(points.row(i).transpose());
    if (d <= min_dist)
      throw Error("evaluate_interior: point " + std::to_string(i) +
                  " is closer to the surface (" + std::to_string(d) +
                  ") than the quadrature threshold " +
                  std::to_string(min_dist));
  }

  std::vector<Box> point_boxes(points.rows());
  for (Index i = 0; i < points.rows(); ++i)
    point_boxes[i].absorb(Vec3(points.row(i).transpose()));
  auto point_tree = std::make_shared<ClusterTree>(
      build_cluster_tree(point_boxes, cfg.clustering.b_min));
  auto p_pt_tri = std::make_shared<const BlockPartition>(build_block_partition(
      point_tree, ops.tri_tree, cfg.clustering.beta));
  auto p_pt_node = std::make_shared<const BlockPartition>(
      build_block_partition(point_tree, ops.node_tree, cfg.clustering.beta));

  auto pts = std::make_shared<const Mat>(points);
  const bool coarse = cfg.amvm;
  auto make = [&](std::shared_ptr<EntryOracle> oracle,
                  std::shared_ptr<const BlockPartition> part,
                  const std::string& name) {
    AssemblyConfig acfg;
    acfg.eps = cfg.eps_aca;
    acfg.beta = cfg.clustering.beta;
    acfg.initial_rank = coarse ? 2 : -1;
    acfg.lookahead = cfg.lookahead;
    acfg.name = name;
    return assemble(std::move(part), std::move(oracle), acfg);
  };

  std::vector<ExprPtr> vgrid(9), wgrid(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (c >= r) {
        auto h = make(std::make_shared<CollocSingleOracle>(
                          ops.kernels, pts, r, c, ops.material),
                      p_pt_tri,
                      "Vt_" + std::to_string(r + 1) + std::to_string(c + 1));
        vgrid[r * 3 + c] = leaf(h);
        if (c != r) vgrid[c * 3 + r] = vgrid[r * 3 + c];  // Kelvin symmetry
      }
      auto w = make(std::make_shared<CollocDoubleOracle>(ops.kernels, pts, r,
                                                         c, ops.material),
                    p_pt_node,
                    "Wt_" + std::to_string(r + 1) + std::to_string(c + 1));
      wgrid[r * 3 + c] = leaf(w);
    }
  const ExprPtr vt = block_grid(3, 3, std::move(vgrid));
  const ExprPtr wt = block_grid(3, 3, std::move(wgrid));

  if (cfg.amvm) {
    auto [vres, vrep] = amvm_multiply(vt, t_total, cfg.amvm_cfg);
    auto [wres, wrep] = amvm_multiply(wt, u_total, cfg.amvm_cfg);
    return vres - wres;
  }
  return matvec(*vt, t_total, Mode::Current) -
         matvec(*wt, u_total, Mode::Current);
}

}  // namespace hmbem
