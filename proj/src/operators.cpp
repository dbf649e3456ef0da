#include "hmbem/operators.hpp"

namespace hmbem {

namespace {

// hat-function gradients, constant per triangle
std::array<Vec3, 3> shape_gradients(const SurfaceMesh& mesh, int t) {
  const auto c = mesh.corners(t);
  const Vec3& n = mesh.normals[t];
  const Real inv2a = 1.0 / (2.0 * mesh.areas[t]);
  return {n.cross(c[2] - c[1]) * inv2a, n.cross(c[0] - c[2]) * inv2a,
          n.cross(c[1] - c[0]) * inv2a};
}

SpMat build_t_matrix(const SurfaceMesh& mesh, int k, int l) {
  const Index m = mesh.num_triangles();
  const Index n = mesh.num_vertices();
  std::vector<Triplet> trip;
  trip.reserve(3 * m);
  for (int t = 0; t < m; ++t) {
    const auto grads = shape_gradients(mesh, t);
    const Vec3& nv = mesh.normals[t];
    for (int a = 0; a < 3; ++a) {
      const Real v = nv[l] * grads[a][k] - nv[k] * grads[a][l];
      if (v != 0.0) trip.emplace_back(t, mesh.triangles[t][a], v);
    }
  }
  SpMat out(m, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat diag3_sparse(const SpMat& a) {
  const Index m = a.rows(), n = a.cols();
  std::vector<Triplet> trip;
  trip.reserve(3 * a.nonZeros());
  for (Index k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      for (int c = 0; c < 3; ++c)
        trip.emplace_back(c * m + it.row(), c * n + it.col(), it.value());
  SpMat out(3 * m, 3 * n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

SparseOps build_sparse_ops(const SurfaceMesh& mesh) {
  const Index m = mesh.num_triangles();
  const Index n = mesh.num_vertices();
  SparseOps ops;
  auto t12 = build_t_matrix(mesh, 0, 1);
  auto t13 = build_t_matrix(mesh, 0, 2);
  auto t23 = build_t_matrix(mesh, 1, 2);

  // T_h = [0, T12, T13; -T12, 0, T23; -T13, -T23, 0]
  std::vector<Triplet> trip;
  auto place = [&trip, m, n](const SpMat& a, int bi, int bj, Real s) {
    for (Index k = 0; k < a.outerSize(); ++k)
      for (SpMat::InnerIterator it(a, k); it; ++it)
        trip.emplace_back(bi * m + it.row(), bj * n + it.col(),
                          s * it.value());
  };
  place(t12, 0, 1, 1.0);
  place(t13, 0, 2, 1.0);
  place(t12, 1, 0, -1.0);
  place(t23, 1, 2, 1.0);
  place(t13, 2, 0, -1.0);
  place(t23, 2, 1, -1.0);
  SpMat th(3 * m, 3 * n);
  th.setFromTriplets(trip.begin(), trip.end());
  ops.th = std::make_shared<const SpMat>(std::move(th));

  // S_1 = diag3(T32), S_2 = diag3(T13), S_3 = diag3(T12); the sign of T21
  // vs T12 cancels in the S' V S sandwiches, so T12 is used for S_3.
  ops.s[0] = std::make_shared<const SpMat>(diag3_sparse(SpMat(-t23)));
  ops.s[1] = std::make_shared<const SpMat>(diag3_sparse(t13));
  ops.s[2] = std::make_shared<const SpMat>(diag3_sparse(t12));

  std::vector<Triplet> mt;
  mt.reserve(3 * m);
  for (int t = 0; t < m; ++t)
    for (int a = 0; a < 3; ++a)
      mt.emplace_back(t, mesh.triangles[t][a], mesh.areas[t] / 3.0);
  SpMat mass(m, n);
  mass.setFromTriplets(mt.begin(), mt.end());
  ops.mass_d3 = std::make_shared<const SpMat>(diag3_sparse(mass));
  ops.mass = std::make_shared<const SpMat>(std::move(mass));

  ops.t12 = std::make_shared<const SpMat>(std::move(t12));
  ops.t13 = std::make_shared<const SpMat>(std::move(t13));
  ops.t23 = std::make_shared<const SpMat>(std::move(t23));
  return ops;
}

ExprPtr compose_Vh(const OperatorSet& ops) {
  const MaterialConfig& m = ops.material;
  std::vector<ExprPtr> grid(9);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) grid[k * 3 + l] = leaf(ops.v[k][l]);
  return scale(0.5 / m.E * (1.0 + m.nu) / (1.0 - m.nu),
               sum({scale(3.0 - 4.0 * m.nu, diag3(leaf(ops.vdelta))),
                    block_grid(3, 3, std::move(grid))}));
}

ExprPtr compose_Kh(const OperatorSet& ops) {
  const ExprPtr t = leaf(ops.sparse.th);
  return sum({diag3(leaf(ops.kdelta)),
              scale(-1.0, compose({diag3(leaf(ops.vdelta)), t})),
              scale(2.0 * ops.material.mu, compose({ops.vh, t}))});
}

ExprPtr compose_Dh(const OperatorSet& ops) {
  // V_Delta,h carries the Laplace single-layer normalization 1/(4 pi), so
  // the sandwich weights are mu and 2 mu rather than mu/4pi and mu/2pi of
  // an unnormalized double integral. The -4 mu^2 coupling follows the weak
  // form; the coefficient set reproduces the Neumann-trace Calderon
  // identity under refinement.
  const Real mu = ops.material.mu;
  const Real c4 = mu;
  const Real c2 = 2.0 * mu;
  const ExprPtr vd = leaf(ops.vdelta);
  const ExprPtr t = leaf(ops.sparse.th);

  std::vector<ExprPtr> terms;
  for (int k = 0; k < 3; ++k) {
    const ExprPtr sk = leaf(ops.sparse.s[k]);
    terms.push_back(scale(c4, compose({transpose(sk), diag3(vd), sk})));
  }
  terms.push_back(scale(c2, compose({transpose(t), diag3(vd), t})));
  terms.push_back(scale(-4.0 * mu * mu, compose({transpose(t), ops.vh, t})));

  // D'_ij = sum_k T_kj' V_Delta T_ki with T_kk = 0 and T_lk = -T_kl
  auto t_signed = [&ops](int k, int l) -> std::pair<ExprPtr, Real> {
    if (k == l) return {nullptr, 0.0};
    const Real s = k < l ? 1.0 : -1.0;
    const int a = std::min(k, l), b = std::max(k, l);
    if (a == 0 && b == 1) return {leaf(ops.sparse.t12), s};
    if (a == 0 && b == 2) return {leaf(ops.sparse.t13), s};
    return {leaf(ops.sparse.t23), s};
  };
  std::vector<ExprPtr> dgrid(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::vector<ExprPtr> parts;
      for (int k = 0; k < 3; ++k) {
        const auto [tkj, s1] = t_signed(k, j);
        const auto [tki, s2] = t_signed(k, i);
        if (!tkj || !tki) continue;
        parts.push_back(
            scale(s1 * s2, compose({transpose(tkj), vd, tki})));
      }
      dgrid[i * 3 + j] = parts.size() == 1 ? parts[0] : sum(std::move(parts));
    }
  terms.push_back(scale(c4, block_grid(3, 3, std::move(dgrid))));
  return sum(std::move(terms));
}

std::vector<Index> dirichlet_triangle_dofs(const DofLayout& layout) {
  std::vector<Index> dofs;
  dofs.reserve(3 * layout.dirichlet_triangle_ids.size());
  for (int c = 0; c < 3; ++c)
    for (int t : layout.dirichlet_triangle_ids)
      dofs.push_back(static_cast<Index>(c) * layout.num_triangles + t);
  return dofs;
}

std::vector<Index> neumann_node_dofs(const DofLayout& layout) {
  std::vector<Index> dofs;
  dofs.reserve(3 * layout.neumann_interior_nodes.size());
  for (int c = 0; c < 3; ++c)
    for (int v : layout.neumann_interior_nodes)
      dofs.push_back(static_cast<Index>(c) * layout.num_nodes + v);
  return dofs;
}

OperatorSet assemble_operators(std::shared_ptr<const SurfaceMesh> mesh,
                               const MaterialConfig& material,
                               const OperatorConfig& cfg) {
  OperatorSet ops;
  ops.mesh = mesh;
  ops.material = material;
  ops.layout = classify_dofs(*mesh);
  ops.kernels = std::make_shared<GalerkinKernels>(mesh, cfg.quadrature);

  // support boxes: triangle box for phi_i, union of incident boxes for psi_j
  const int m = mesh->num_triangles();
  const int n = mesh->num_vertices();
  std::vector<Box> tri_boxes(m);
  for (int t = 0; t < m; ++t)
    for (const Vec3& c : mesh->corners(t)) tri_boxes[t].absorb(c);
  std::vector<Box> node_boxes(n);
  for (int v = 0; v < n; ++v)
    for (int t : mesh->vertex_triangles[v]) node_boxes[v].absorb(tri_boxes[t]);

  auto tri_tree = std::make_shared<ClusterTree>(
      build_cluster_tree(tri_boxes, cfg.clustering.b_min));
  auto node_tree = std::make_shared<ClusterTree>(
      build_cluster_tree(node_boxes, cfg.clustering.b_min));
  ops.tri_tree = tri_tree;
  ops.node_tree = node_tree;
  ops.p_tri = std::make_shared<const BlockPartition>(
      build_block_partition(tri_tree, tri_tree, cfg.clustering.beta));
  ops.p_trinode = std::make_shared<const BlockPartition>(
      build_block_partition(tri_tree, node_tree, cfg.clustering.beta));
  ops.c_sp_tri = sparsity_constant(*ops.p_tri);
  ops.c_sp_trinode = sparsity_constant(*ops.p_trinode);
  ops.tree_depth = std::max(tri_tree->depth, node_tree->depth);

  const Real beta_stop =
      cfg.beta_stop > 0 ? cfg.beta_stop : cfg.clustering.beta;
  auto assemble_kernel = [&](KernelId id, int coarse_rank,
                             const std::string& name) {
    AssemblyConfig acfg;
    acfg.eps = cfg.eps_aca;
    acfg.beta = beta_stop;
    acfg.initial_rank = coarse_rank;
    acfg.lookahead = cfg.lookahead;
    acfg.max_rank = cfg.max_rank;
    acfg.name = name;
    auto oracle = std::make_shared<KernelOracle>(ops.kernels, id);
    const auto& part =
        id.type == KernelId::Type::KDelta ? ops.p_trinode : ops.p_tri;
    return assemble(part, std::move(oracle), acfg);
  };

  ops.vdelta = assemble_kernel(KernelId::vdelta(), cfg.coarse_rank_v, "V_Delta");
  for (int k = 0; k < 3; ++k)
    for (int l = k; l < 3; ++l) {
      auto h = assemble_kernel(KernelId::vkl(k, l), cfg.coarse_rank_v,
                               "V_" + std::to_string(k + 1) +
                                   std::to_string(l + 1));
      ops.v[k][l] = h;
      ops.v[l][k] = h;  // V_kl and V_lk alias one oracle
    }
  ops.kdelta = assemble_kernel(KernelId::kdelta(), cfg.coarse_rank_k, "K_Delta");

  ops.sparse = build_sparse_ops(*mesh);
  ops.vh = compose_Vh(ops);
  ops.kh = compose_Kh(ops);
  ops.dh = compose_Dh(ops);
  return ops;
}

}  // namespace hmbem
