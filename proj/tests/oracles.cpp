#include "oracles.hpp"

#include <map>
#include <random>

#include "hmbem/parallel.hpp"

namespace hmbem::test {

namespace {

struct RawMesh {
  std::vector<std::array<Real, 3>> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> dirichlet;
};

SurfaceMesh finish(const RawMesh& raw) {
  SurfaceMesh mesh;
  mesh.vertices.resize(static_cast<Index>(raw.vertices.size()), 3);
  for (std::size_t v = 0; v < raw.vertices.size(); ++v)
    for (int a = 0; a < 3; ++a) mesh.vertices(v, a) = raw.vertices[v][a];
  mesh.triangles = raw.triangles;
  mesh.dirichlet = raw.dirichlet;
  const int nt = mesh.num_triangles();
  mesh.normals.resize(nt);
  mesh.centroids.resize(nt);
  mesh.areas.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto c = mesh.corners(t);
    const Vec3 n = (c[1] - c[0]).cross(c[2] - c[0]);
    mesh.areas[t] = 0.5 * n.norm();
    mesh.normals[t] = n.normalized();
    mesh.centroids[t] = (c[0] + c[1] + c[2]) / 3.0;
  }
  mesh.vertex_triangles.resize(mesh.num_vertices());
  for (int t = 0; t < nt; ++t)
    for (int v : mesh.triangles[t]) mesh.vertex_triangles[v].push_back(t);
  for (int t = 0; t < nt; ++t)
    (mesh.dirichlet[t] ? mesh.dirichlet_triangles : mesh.neumann_triangles)
        .push_back(t);
  return mesh;
}

using InsideFn = std::function<bool(Real, Real, Real)>;

RawMesh voxel_surface(int n, const InsideFn& inside) {
  RawMesh mesh;
  auto coord = [&](int i) { return (-1.0 * (n - i) + 1.0 * i) / n; };
  std::map<std::array<int, 3>, int> ids;
  auto vertex = [&](int i, int j, int k) {
    const std::array<int, 3> key = {i, j, k};
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({coord(i), coord(j), coord(k)});
    ids[key] = id;
    return id;
  };
  auto cell_inside = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return false;
    return inside(0.5 * (coord(i) + coord(i + 1)),
                  0.5 * (coord(j) + coord(j + 1)),
                  0.5 * (coord(k) + coord(k + 1)));
  };
  const int tang[3][2] = {{1, 2}, {2, 0}, {0, 1}};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (!cell_inside(i, j, k)) continue;
        const int cell[3] = {i, j, k};
        for (int d = 0; d < 3; ++d)
          for (int s = -1; s <= 1; s += 2) {
            int nb[3] = {i, j, k};
            nb[d] += s;
            if (cell_inside(nb[0], nb[1], nb[2])) continue;
            int base[3] = {cell[0], cell[1], cell[2]};
            if (s > 0) base[d] += 1;
            int du[3] = {0, 0, 0}, dv[3] = {0, 0, 0};
            du[tang[d][0]] = 1;
            dv[tang[d][1]] = 1;
            auto corner = [&](int a, int b) {
              return vertex(base[0] + a * du[0] + b * dv[0],
                            base[1] + a * du[1] + b * dv[1],
                            base[2] + a * du[2] + b * dv[2]);
            };
            const int c00 = corner(0, 0), c10 = corner(1, 0);
            const int c11 = corner(1, 1), c01 = corner(0, 1);
            if (s > 0) {
              mesh.triangles.push_back({c00, c10, c11});
              mesh.triangles.push_back({c00, c11, c01});
            } else {
              mesh.triangles.push_back({c00, c11, c10});
              mesh.triangles.push_back({c00, c01, c11});
            }
          }
      }
  return mesh;
}

void label(RawMesh& mesh, const std::function<bool(Real, Real, Real)>& d) {
  mesh.dirichlet.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Real c[3] = {0, 0, 0};
    for (int v : mesh.triangles[t])
      for (int a = 0; a < 3; ++a) c[a] += mesh.vertices[v][a] / 3.0;
    mesh.dirichlet[t] = d(c[0], c[1], c[2]) ? 1 : 0;
  }
}

}  // namespace

SurfaceMesh make_cube_mesh(int n) {
  RawMesh raw = voxel_surface(n, [](Real, Real, Real) { return true; });
  label(raw, [](Real x, Real y, Real z) {
    return x >= 1.0 || y <= -1.0 || z >= 1.0;
  });
  return finish(raw);
}

SurfaceMesh make_tetra_mesh() {
  RawMesh raw;
  raw.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  // outward orientation
  raw.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  raw.dirichlet = {1, 1, 1, 1};
  return finish(raw);
}

SurfaceMesh make_beam_mesh(int n) {
  RawMesh raw = voxel_surface(n, [](Real, Real y, Real z) {
    if (z >= 0.5 || z <= -0.5) return true;
    return y >= -0.5 && y <= 0.5;
  });
  label(raw, [](Real x, Real, Real) { return x <= -1.0 || x >= 1.0; });
  return finish(raw);
}

namespace {

Real gauss_pair(const std::array<Vec3, 3>& tx, const std::array<Vec3, 3>& ty,
                const std::function<Real(const Vec3&, const Vec3&)>& kernel,
                const QuadratureRule& rule) {
  const Real ax =
      0.5 * (tx[1] - tx[0]).cross(tx[2] - tx[0]).norm();
  const Real ay =
      0.5 * (ty[1] - ty[0]).cross(ty[2] - ty[0]).norm();
  Real acc = 0.0;
  for (Index p = 0; p < rule.weights.size(); ++p) {
    const Vec3 x = tx[0] + rule.points(p, 0) * (tx[1] - tx[0]) +
                   rule.points(p, 1) * (tx[2] - tx[0]);
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const Vec3 y = ty[0] + rule.points(q, 0) * (ty[1] - ty[0]) +
                     rule.points(q, 1) * (ty[2] - ty[0]);
      acc += rule.weights(p) * rule.weights(q) * kernel(x, y);
    }
  }
  return 4.0 * ax * ay * acc;
}

Real diam(const std::array<Vec3, 3>& t) {
  return std::max({(t[0] - t[1]).norm(), (t[1] - t[2]).norm(),
                   (t[0] - t[2]).norm()});
}

Real dist_estimate(const std::array<Vec3, 3>& a, const std::array<Vec3, 3>& b) {
  Real best = std::numeric_limits<Real>::max();
  for (const Vec3& p : a)
    for (const Vec3& q : b) best = std::min(best, (p - q).norm());
  return best;
}

void split4(const std::array<Vec3, 3>& t, std::array<Vec3, 3> out[4]) {
  const Vec3 m01 = 0.5 * (t[0] + t[1]);
  const Vec3 m12 = 0.5 * (t[1] + t[2]);
  const Vec3 m02 = 0.5 * (t[0] + t[2]);
  out[0] = {t[0], m01, m02};
  out[1] = {m01, t[1], m12};
  out[2] = {m02, m12, t[2]};
  out[3] = {m01, m12, m02};
}

Real recurse_pair(const std::array<Vec3, 3>& tx, const std::array<Vec3, 3>& ty,
                  const std::function<Real(const Vec3&, const Vec3&)>& kernel,
                  const QuadratureRule& rule, int depth) {
  const Real d = dist_estimate(tx, ty);
  const Real h = std::max(diam(tx), diam(ty));
  if (d > 1.0 * h || depth == 0) return gauss_pair(tx, ty, kernel, rule);
  std::array<Vec3, 3> sx[4], sy[4];
  split4(tx, sx);
  split4(ty, sy);
  Real acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      acc += recurse_pair(sx[a], sy[b], kernel, rule, depth - 1);
  return acc;
}

}  // namespace

Real bruteforce_pair_integral(
    const std::array<Vec3, 3>& tri_x, const std::array<Vec3, 3>& tri_y,
    const std::function<Real(const Vec3&, const Vec3&)>& kernel,
    int max_depth) {
  static const QuadratureRule rule = gauss_rule(6);
  return recurse_pair(tri_x, tri_y, kernel, rule, max_depth);
}

Real analytic_triangle_potential(const Vec3& p, const std::array<Vec3, 3>& tri) {
  const Vec3 nrm = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
  const Real d = nrm.dot(p - tri[0]);
  const Vec3 proj = p - d * nrm;
  Real acc = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec3& a = tri[e];
    const Vec3& b = tri[(e + 1) % 3];
    const Vec3 s_hat = (b - a).normalized();
    const Vec3 m_hat = s_hat.cross(nrm);
    const Real t = (a - proj).dot(m_hat);
    const Real s1 = (a - proj).dot(s_hat);
    const Real s2 = (b - proj).dot(s_hat);
    const Real r1 = (p - a).norm();
    const Real r2 = (p - b).norm();
    const Real r0sq = t * t + d * d;
    if (r1 + s1 > 0 && r2 + s2 > 0)
      acc += t * std::log((r2 + s2) / (r1 + s1));
    const Real ad = std::abs(d);
    acc -= ad * (std::atan2(t * s2, r0sq + ad * r2) -
                 std::atan2(t * s1, r0sq + ad * r1));
  }
  return acc;
}

namespace {

Real dist_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const Real t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

Real outer_graded(const std::array<Vec3, 3>& cell,
                  const std::array<Vec3, 3>& trial, const QuadratureRule& rule,
                  int depth) {
  const Real h = std::max({(cell[0] - cell[1]).norm(),
                           (cell[1] - cell[2]).norm(),
                           (cell[0] - cell[2]).norm()});
  Real front = std::numeric_limits<Real>::max();
  for (const Vec3& c : cell)
    for (int e = 0; e < 3; ++e)
      front = std::min(front,
                       dist_to_segment(c, trial[e], trial[(e + 1) % 3]));
  if (depth == 0 || front > 0.5 * h) {
    const Real area = 0.5 * (cell[1] - cell[0]).cross(cell[2] - cell[0]).norm();
    Real acc = 0.0;
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const Vec3 x = cell[0] + rule.points(q, 0) * (cell[1] - cell[0]) +
                     rule.points(q, 1) * (cell[2] - cell[0]);
      acc += rule.weights(q) * analytic_triangle_potential(x, trial);
    }
    return 2.0 * area * acc;
  }
  std::array<Vec3, 3> sub[4];
  split4(cell, sub);
  Real acc = 0.0;
  for (int i = 0; i < 4; ++i)
    acc += outer_graded(sub[i], trial, rule, depth - 1);
  return acc;
}

}  // namespace

Real vdelta_singular_oracle(const std::array<Vec3, 3>& tri_x,
                            const std::array<Vec3, 3>& tri_y, int depth) {
  static const QuadratureRule rule = gauss_rule(6);
  return outer_graded(tri_x, tri_y, rule, depth) / (4.0 * M_PI);
}

Mat dense_kernel(const GalerkinKernels& kernels, const KernelId& id) {
  const int m = kernels.mesh().num_triangles();
  const int n = id.type == KernelId::Type::KDelta
                    ? kernels.mesh().num_vertices()
                    : kernels.mesh().num_triangles();
  Mat out(m, n);
  const bool symmetric = id.type != KernelId::Type::KDelta;
  parallel_for(m, [&](long i) {
    const int j0 = symmetric ? static_cast<int>(i) : 0;
    for (int j = j0; j < n; ++j)
      out(i, j) = kernels.entry(id, static_cast<int>(i), j);
  });
  if (symmetric)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j) out(i, j) = out(j, i);
  return out;
}

DenseOperators dense_operators(const OperatorSet& ops) {
  DenseOperators d;
  d.vdelta = dense_kernel(*ops.kernels, KernelId::vdelta());
  for (int k = 0; k < 3; ++k)
    for (int l = k; l < 3; ++l) {
      d.v[k][l] = dense_kernel(*ops.kernels, KernelId::vkl(k, l));
      if (k != l) d.v[l][k] = d.v[k][l];
    }
  d.kdelta = dense_kernel(*ops.kernels, KernelId::kdelta());
  d.t_h = Mat(*ops.sparse.th);
  d.mass_d3 = Mat(*ops.sparse.mass_d3);

  const Index m = ops.m(), n = ops.n();
  const MaterialConfig& mt = ops.material;
  auto diag3_of = [](const Mat& a) {
    Mat out = Mat::Zero(3 * a.rows(), 3 * a.cols());
    for (int c = 0; c < 3; ++c)
      out.block(c * a.rows(), c * a.cols(), a.rows(), a.cols()) = a;
    return out;
  };

  Mat vgrid(3 * m, 3 * m);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      vgrid.block(k * m, l * m, m, m) = d.v[k][l];
  const Real pref = 0.5 / mt.E * (1.0 + mt.nu) / (1.0 - mt.nu);
  d.vh = pref * ((3.0 - 4.0 * mt.nu) * diag3_of(d.vdelta) + vgrid);

  d.kh = diag3_of(d.kdelta) - diag3_of(d.vdelta) * d.t_h +
         2.0 * mt.mu * d.vh * d.t_h;

  const Real c4 = mt.mu;
  const Real c2 = 2.0 * mt.mu;
  Mat dh = Mat::Zero(3 * n, 3 * n);
  const Mat s_scalar[3] = {Mat(-Mat(*ops.sparse.t23)), Mat(*ops.sparse.t13),
                           Mat(*ops.sparse.t12)};
  for (int k = 0; k < 3; ++k) {
    const Mat sk = diag3_of(s_scalar[k]);
    dh += c4 * sk.transpose() * diag3_of(d.vdelta) * sk;
  }
  dh += c2 * d.t_h.transpose() * diag3_of(d.vdelta) * d.t_h;
  dh -= 4.0 * mt.mu * mt.mu * d.t_h.transpose() * d.vh * d.t_h;
  // D'_ij = sum_k T_kj' V_Delta T_ki
  const Mat t_scalar[3] = {Mat(*ops.sparse.t12), Mat(*ops.sparse.t13),
                           Mat(*ops.sparse.t23)};
  auto t_of = [&](int k, int l) -> Mat {
    if (k == l) return Mat::Zero(m, n);
    const Real s = k < l ? 1.0 : -1.0;
    const int a = std::min(k, l), b = std::max(k, l);
    if (a == 0 && b == 1) return s * t_scalar[0];
    if (a == 0 && b == 2) return s * t_scalar[1];
    return s * t_scalar[2];
  };
  Mat dprime = Mat::Zero(3 * n, 3 * n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Mat blockm = Mat::Zero(n, n);
      for (int k = 0; k < 3; ++k)
        blockm += t_of(k, j).transpose() * d.vdelta * t_of(k, i);
      dprime.block(i * n, j * n, n, n) = blockm;
    }
  dh += c4 * dprime;
  d.dh = dh;
  return d;
}

Mat dense_saddle(const OperatorSet& ops, const DenseOperators& d) {
  const auto tdofs = dirichlet_triangle_dofs(ops.layout);
  const auto udofs = neumann_node_dofs(ops.layout);
  const Index nt = static_cast<Index>(tdofs.size());
  const Index nu = static_cast<Index>(udofs.size());
  Mat a(nt + nu, nt + nu);
  for (Index i = 0; i < nt; ++i)
    for (Index j = 0; j < nt; ++j) a(i, j) = d.vh(tdofs[i], tdofs[j]);
  for (Index i = 0; i < nt; ++i)
    for (Index j = 0; j < nu; ++j) {
      a(i, nt + j) = -d.kh(tdofs[i], udofs[j]);
      a(nt + j, i) = d.kh(tdofs[i], udofs[j]);
    }
  for (Index i = 0; i < nu; ++i)
    for (Index j = 0; j < nu; ++j)
      a(nt + i, nt + j) = d.dh(udofs[i], udofs[j]);
  return a;
}

Mat dense_rhs_operator(const OperatorSet& ops, const DenseOperators& d) {
  const Index m3 = 3 * ops.m(), n3 = 3 * ops.n();
  Mat full(m3 + n3, m3 + n3);
  full.topLeftCorner(m3, m3) = -d.vh;
  full.topRightCorner(m3, n3) = 0.5 * d.mass_d3 + d.kh;
  full.bottomLeftCorner(n3, m3) =
      0.5 * d.mass_d3.transpose() - d.kh.transpose();
  full.bottomRightCorner(n3, n3) = -d.dh;

  const auto tdofs = dirichlet_triangle_dofs(ops.layout);
  const auto udofs = neumann_node_dofs(ops.layout);
  Mat out(static_cast<Index>(tdofs.size() + udofs.size()), m3 + n3);
  for (std::size_t i = 0; i < tdofs.size(); ++i)
    out.row(static_cast<Index>(i)) = full.row(tdofs[i]);
  for (std::size_t i = 0; i < udofs.size(); ++i)
    out.row(static_cast<Index>(tdofs.size() + i)) = full.row(m3 + udofs[i]);
  return out;
}

void manufactured_data(const SurfaceMesh& mesh, const DofLayout& layout,
                       const MaterialConfig& m, const Vec3& p, const Vec3& a,
                       Vec& g_neumann, Vec& g_dirichlet) {
  g_neumann = kelvin_neumann_data(mesh, m, p, a);
  g_dirichlet = kelvin_dirichlet_data(mesh, m, p, a);
  // the extensions vanish where the unknowns live
  const Index nt = mesh.num_triangles();
  const Index nn = mesh.num_vertices();
  for (int t : layout.dirichlet_triangle_ids)
    for (int c = 0; c < 3; ++c) g_neumann[c * nt + t] = 0.0;
  for (int v : layout.neumann_interior_nodes)
    for (int c = 0; c < 3; ++c) g_dirichlet[c * nn + v] = 0.0;
}

Vec random_vector(Index n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<Real> dist(-1.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

}  // namespace hmbem::test
