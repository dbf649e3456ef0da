#include "hmbem/kernels.hpp"

#include <cmath>

namespace hmbem {

std::pair<Real, Real> lame_constants(Real E, Real nu) {
  if (E <= 0.0) throw Error("lame_constants: E must be positive");
  if (nu <= 0.0 || nu >= 0.5)
    throw Error("lame_constants: nu must lie in (0, 1/2)");
  const Real lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const Real mu = E / (2.0 * (1.0 + nu));
  return {lambda, mu};
}

MaterialConfig make_material(Real E, Real nu) {
  const auto [lambda, mu] = lame_constants(E, nu);
  return {E, nu, lambda, mu};
}

Mat3 kelvin_tensor(const Vec3& x, const MaterialConfig& m) {
  const Real r = x.norm();
  if (r == 0.0) throw Error("kelvin_tensor: singular point x = 0");
  const Real c = (1.0 + m.nu) / (8.0 * M_PI * m.E * (1.0 - m.nu));
  Mat3 s = (c * (3.0 - 4.0 * m.nu) / r) * Mat3::Identity();
  s += (c / (r * r * r)) * (x * x.transpose());
  return s;
}

Mat3 kelvin_traction(const Vec3& x, const Vec3& n, const MaterialConfig& m) {
  const Real r = x.norm();
  if (r == 0.0) throw Error("kelvin_traction: singular point x = 0");
  const Real c = (1.0 + m.nu) / (8.0 * M_PI * m.E * (1.0 - m.nu));
  const Real r3 = r * r * r;
  const Real r5 = r3 * r * r;
  const Real k34 = 3.0 - 4.0 * m.nu;

  // dU[k](i,j) = d/dx_k of the Kelvin tensor
  auto dU = [&](int k, int i, int j) {
    Real v = -k34 * (i == j ? x[k] / r3 : 0.0);
    v += ((i == k ? x[j] : 0.0) + (j == k ? x[i] : 0.0)) / r3;
    v -= 3.0 * x[i] * x[j] * x[k] / r5;
    return c * v;
  };

  Mat3 t;
  for (int j = 0; j < 3; ++j) {
    const Real div_j = -2.0 * c * (1.0 - 2.0 * m.nu) * x[j] / r3;
    for (int i = 0; i < 3; ++i) {
      Real v = m.lambda * n[i] * div_j;
      for (int k = 0; k < 3; ++k)
        v += m.mu * n[k] * (dU(k, i, j) + dU(i, k, j));
      t(i, j) = v;
    }
  }
  return t;
}

GalerkinKernels::GalerkinKernels(std::shared_ptr<const SurfaceMesh> mesh,
                                 QuadratureConfig qc)
    : mesh_(std::move(mesh)), qc_(qc) {
  for (int c = 1; c <= 2; ++c)
    singular_rules_[c] =
        &pair_rule(static_cast<PairCase>(c), qc_.singular_order);
  singular_rules_[3] = &pair_rule(PairCase::Identical,
                                  qc_.singular_order + qc_.identical_bump);
  for (int o = 1; o <= 6; ++o) tri_rules_.push_back(gauss_rule(o));
  // prefetch the disjoint tensor rules used by the distance tiers
  pair_rule(PairCase::Disjoint, 2);
  pair_rule(PairCase::Disjoint, 4);
  pair_rule(PairCase::Disjoint, std::min(qc_.disjoint_order + 1, 6));
  pair_rule(PairCase::Disjoint, qc_.disjoint_order);
}

int GalerkinKernels::disjoint_order(int ti, int tj) const {
  const Real di = mesh_->triangle_diameter(ti);
  const Real dj = mesh_->triangle_diameter(tj);
  const Real dmax = std::max(di, dj);
  const Real gap =
      (mesh_->centroids[ti] - mesh_->centroids[tj]).norm() - 0.5 * (di + dj);
  if (gap >= qc_.far_ratio * dmax) return std::min(qc_.disjoint_order, 2);
  if (gap >= qc_.mid_ratio * dmax) return qc_.disjoint_order;
  if (gap >= qc_.near_ratio * dmax) return qc_.disjoint_order;
  return std::min(qc_.disjoint_order + 1, 6);
}

int GalerkinKernels::point_order(const Vec3& p, int tj) const {
  const Real dj = mesh_->triangle_diameter(tj);
  const Real gap = (p - mesh_->centroids[tj]).norm() - 0.5 * dj;
  if (gap >= qc_.far_ratio * dj) return std::min(qc_.disjoint_order, 2);
  if (gap >= qc_.mid_ratio * dj) return qc_.disjoint_order;
  return std::min(qc_.disjoint_order + 1, 6);
}

// f(x, y, trial_bary) where trial_bary are the barycentric coordinates of y
// with respect to the *original* trial vertex order.
template <class F>
Real GalerkinKernels::integrate_pair(int ti, int tj, F&& f) const {
  int rot_t = 0, rot_s = 0;
  const PairCase c = classify_pair(mesh_->triangles[ti], mesh_->triangles[tj],
                                   rot_t, rot_s);
  const PairRule* rule = nullptr;
  if (c == PairCase::Disjoint)
    rule = &pair_rule(PairCase::Disjoint, disjoint_order(ti, tj));
  else
    rule = singular_rules_[static_cast<int>(c)];

  const auto xp = test_vertex_perm(rot_t);
  const auto yp = trial_vertex_perm(c, rot_s);
  const auto xc = mesh_->corners(ti);
  const auto yc = mesh_->corners(tj);
  const Vec3 x0 = xc[xp[0]], x1 = xc[xp[1]], x2 = xc[xp[2]];
  const Vec3 y0 = yc[yp[0]], y1 = yc[yp[1]], y2 = yc[yp[2]];

  Real acc = 0.0;
  Vec3 bary;
  const std::size_t n = rule->w.size();
  for (std::size_t q = 0; q < n; ++q) {
    const Real a1 = rule->xr1[q], a2 = rule->xr2[q];
    const Real b1 = rule->yr1[q], b2 = rule->yr2[q];
    const Vec3 x = x0 + a1 * (x1 - x0) + a2 * (x2 - x0);
    const Vec3 y = y0 + b1 * (y1 - y0) + b2 * (y2 - y0);
    // rotated barycentrics back to the original local vertex order
    bary[yp[0]] = 1.0 - b1 - b2;
    bary[yp[1]] = b1;
    bary[yp[2]] = b2;
    acc += rule->w[q] * f(x, y, bary);
  }
  return 4.0 * mesh_->areas[ti] * mesh_->areas[tj] * acc;
}

Real GalerkinKernels::vdelta(int i, int j) const {
  // the kernel is symmetric in (x, y); canonicalize so that entry(i,j) and
  // entry(j,i) run the identical computation
  if (i > j) std::swap(i, j);
  return integrate_pair(i, j, [](const Vec3& x, const Vec3& y, const Vec3&) {
    return 1.0 / (4.0 * M_PI * (x - y).norm());
  });
}

Real GalerkinKernels::vkl(int k, int l, int i, int j) const {
  if (i > j) std::swap(i, j);
  return integrate_pair(i, j,
                        [k, l](const Vec3& x, const Vec3& y, const Vec3&) {
                          const Vec3 d = x - y;
                          const Real r = d.norm();
                          return d[k] * d[l] / (4.0 * M_PI * r * r * r);
                        });
}

Real GalerkinKernels::kdelta(int i, int node_j) const {
  Real acc = 0.0;
  for (int tau : mesh_->vertex_triangles[node_j]) {
    if (tau == i) continue;  // coplanar pair, (x-y).n(y) = 0 identically
    int local = 0;
    while (mesh_->triangles[tau][local] != node_j) ++local;
    const Vec3 n = mesh_->normals[tau];
    acc += integrate_pair(
        i, tau, [&n, local](const Vec3& x, const Vec3& y, const Vec3& bary) {
          const Vec3 d = x - y;
          const Real r = d.norm();
          return d.dot(n) / (4.0 * M_PI * r * r * r) * bary[local];
        });
  }
  return acc;
}

Real GalerkinKernels::entry(const KernelId& id, int i, int j) const {
  switch (id.type) {
    case KernelId::Type::VDelta: return vdelta(i, j);
    case KernelId::Type::Vkl: return vkl(id.k, id.l, i, j);
    default: return kdelta(i, j);
  }
}

Real GalerkinKernels::colloc_single(const Vec3& point, int r, int c, int tri_j,
                                    const MaterialConfig& m) const {
  const QuadratureRule& rule = tri_rules_[point_order(point, tri_j) - 1];
  const auto yc = mesh_->corners(tri_j);
  Real acc = 0.0;
  for (Index q = 0; q < rule.weights.size(); ++q) {
    const Vec3 y = yc[0] + rule.points(q, 0) * (yc[1] - yc[0]) +
                   rule.points(q, 1) * (yc[2] - yc[0]);
    acc += rule.weights(q) * kelvin_tensor(point - y, m)(r, c);
  }
  return 2.0 * mesh_->areas[tri_j] * acc;
}

Real GalerkinKernels::colloc_double(const Vec3& point, int r, int c,
                                    int node_k, const MaterialConfig& m) const {
  Real acc = 0.0;
  for (int tau : mesh_->vertex_triangles[node_k]) {
    const QuadratureRule& rule = tri_rules_[point_order(point, tau) - 1];
    int local = 0;
    while (mesh_->triangles[tau][local] != node_k) ++local;
    const auto yc = mesh_->corners(tau);
    const Vec3 n = mesh_->normals[tau];
    Real part = 0.0;
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const Real b1 = rule.points(q, 0), b2 = rule.points(q, 1);
      const Vec3 y = yc[0] + b1 * (yc[1] - yc[0]) + b2 * (yc[2] - yc[0]);
      const Real psi = local == 0 ? 1.0 - b1 - b2 : local == 1 ? b1 : b2;
      part += rule.weights(q) * kelvin_traction(y - point, n, m)(r, c) * psi;
    }
    acc += 2.0 * mesh_->areas[tau] * part;
  }
  return acc;
}

KernelOracle::KernelOracle(std::shared_ptr<const GalerkinKernels> kernels,
                           KernelId id)
    : kernels_(std::move(kernels)), id_(id) {}

Index KernelOracle::rows() const { return kernels_->mesh().num_triangles(); }

Index KernelOracle::cols() const {
  return id_.type == KernelId::Type::KDelta ? kernels_->mesh().num_vertices()
                                            : kernels_->mesh().num_triangles();
}

Real KernelOracle::entry(Index i, Index j) const {
  return kernels_->entry(id_, static_cast<int>(i), static_cast<int>(j));
}

Vec3 kelvin_displacement(const Vec3& x, const Vec3& p, const Vec3& a,
                         const MaterialConfig& m) {
  return kelvin_tensor(x - p, m) * a;
}

Vec kelvin_dirichlet_data(const SurfaceMesh& mesh, const MaterialConfig& m,
                          const Vec3& p, const Vec3& a) {
  const int n = mesh.num_vertices();
  Vec g(3 * n);
  for (int v = 0; v < n; ++v) {
    const Vec3 u = kelvin_displacement(mesh.vertex(v), p, a, m);
    for (int c = 0; c < 3; ++c) g[c * n + v] = u[c];
  }
  return g;
}

Vec kelvin_neumann_data(const SurfaceMesh& mesh, const MaterialConfig& m,
                        const Vec3& p, const Vec3& a) {
  const int nt = mesh.num_triangles();
  Vec g(3 * nt);
  for (int t = 0; t < nt; ++t) {
    const Vec3 tr =
        kelvin_traction(mesh.centroids[t] - p, mesh.normals[t], m) * a;
    for (int c = 0; c < 3; ++c) g[c * nt + t] = tr[c];
  }
  return g;
}

}  // namespace hmbem
