#include "hmbem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace hmbem {

namespace {

// Appends all distinct permutations of the barycentric triple (a,b,c) with
// weight w (normalized so that the weights of a rule sum to 1).
void add_orbit(std::vector<std::array<Real, 3>>& pts, std::vector<Real>& ws,
               Real a, Real b, Real c, Real w) {
  const std::array<std::array<Real, 3>, 6> perms = {{{a, b, c},
                                                     {a, c, b},
                                                     {b, a, c},
                                                     {b, c, a},
                                                     {c, a, b},
                                                     {c, b, a}}};
  for (const auto& p : perms) {
    bool seen = false;
    for (std::size_t i = pts.size() >= 6 ? pts.size() - 6 : 0; i < pts.size();
         ++i) {
      if (std::abs(pts[i][0] - p[0]) < 1e-15 &&
          std::abs(pts[i][1] - p[1]) < 1e-15) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      pts.push_back(p);
      ws.push_back(w);
    }
  }
}

QuadratureRule from_orbits(const std::vector<std::array<Real, 3>>& pts,
                           const std::vector<Real>& ws, int order) {
  QuadratureRule rule;
  rule.order = order;
  rule.points.resize(static_cast<Index>(pts.size()), 2);
  rule.weights.resize(static_cast<Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // barycentric (l0,l1,l2) -> reference (a,b) = (l1,l2)
    rule.points(static_cast<Index>(i), 0) = pts[i][1];
    rule.points(static_cast<Index>(i), 1) = pts[i][2];
    rule.weights(static_cast<Index>(i)) = 0.5 * ws[i];
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_rule(int order) {
  std::vector<std::array<Real, 3>> pts;
  std::vector<Real> ws;
  const Real third = 1.0 / 3.0;
  switch (order) {
    case 1:
      add_orbit(pts, ws, third, third, third, 1.0);
      return from_orbits(pts, ws, 1);
    case 2:
      add_orbit(pts, ws, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, third);
      return from_orbits(pts, ws, 2);
    case 3:
    case 4:
      // Dunavant degree-4 rule, 6 points, also used for order 3 (the
      // degree-3 rules in common use carry a negative centroid weight).
      add_orbit(pts, ws, 0.816847572980459, 0.091576213509771,
                0.091576213509771, 0.109951743655322);
      add_orbit(pts, ws, 0.108103018168070, 0.445948490915965,
                0.445948490915965, 0.223381589678011);
      return from_orbits(pts, ws, order);
    case 5: {
      const Real s15 = std::sqrt(15.0);
      add_orbit(pts, ws, third, third, third, 9.0 / 40.0);
      add_orbit(pts, ws, (9.0 - 2.0 * s15) / 21.0, (6.0 + s15) / 21.0,
                (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
      add_orbit(pts, ws, (9.0 + 2.0 * s15) / 21.0, (6.0 - s15) / 21.0,
                (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
      return from_orbits(pts, ws, 5);
    }
    case 6:
      add_orbit(pts, ws, 0.873821971016996, 0.063089014491502,
                0.063089014491502, 0.050844906370207);
      add_orbit(pts, ws, 0.501426509658179, 0.249286745170910,
                0.249286745170910, 0.116786275726379);
      add_orbit(pts, ws, 0.636502499121399, 0.310352451033785,
                0.053145049844816, 0.082851075618374);
      return from_orbits(pts, ws, 6);
    default:
      throw Error("gauss_rule: unsupported order " + std::to_string(order));
  }
}

void gauss_legendre_01(int n, std::vector<Real>& x, std::vector<Real>& w) {
  if (n < 1) throw Error("gauss_legendre_01: n must be positive");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n from the Chebyshev initial guess.
    Real z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    Real pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const Real p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const Real dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // map [-1,1] -> [0,1]
    x[i] = 0.5 * (1.0 - z);
    x[n - 1 - i] = 0.5 * (1.0 + z);
    const Real wi = 1.0 / ((1.0 - z * z) * pp * pp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
}

PairCase classify_pair(const std::array<int, 3>& test_tri,
                       const std::array<int, 3>& trial_tri, int& rot_test,
                       int& rot_trial) {
  rot_test = 0;
  rot_trial = 0;
  if (test_tri == trial_tri) return PairCase::Identical;

  // shared edge, traversed in opposite directions on a consistently
  // oriented closed surface
  for (int rt = 0; rt < 3; ++rt) {
    for (int rs = 0; rs < 3; ++rs) {
      if (trial_tri[rs] == test_tri[(rt + 1) % 3] &&
          trial_tri[(rs + 1) % 3] == test_tri[rt]) {
        rot_test = rt;
        rot_trial = rs;
        return PairCase::Edge;
      }
    }
  }
  for (int rt = 0; rt < 3; ++rt) {
    for (int rs = 0; rs < 3; ++rs) {
      if (test_tri[rt] == trial_tri[rs]) {
        rot_test = rt;
        rot_trial = rs;
        return PairCase::Vertex;
      }
    }
  }
  return PairCase::Disjoint;
}

std::array<int, 3> test_vertex_perm(int rot) {
  return {rot, (rot + 1) % 3, (rot + 2) % 3};
}

std::array<int, 3> trial_vertex_perm(PairCase c, int rot) {
  std::array<int, 3> p = {rot, (rot + 1) % 3, (rot + 2) % 3};
  if (c == PairCase::Edge) std::swap(p[0], p[1]);
  return p;
}

namespace {

struct RefPoint {
  Real x1, x2, y1, y2, jac;
};

// Sauter-Schwab subdomain maps from [0,1]^4 to pairs of reference-triangle
// coordinates; see Sauter & Schwab, "Boundary Element Methods", ch. 5.
void map_identical(Real xi, Real e1, Real e2, Real e3, int simplex,
                   RefPoint& p) {
  p.jac = xi * xi * xi * e1 * e1 * e2;
  switch (simplex) {
    case 0:
      p.x1 = xi * e1 * (1 - e2);
      p.x2 = xi * (1 - e1 * (1 - e2));
      p.y1 = xi * e1 * (1 - e2 * e3);
      p.y2 = xi * (1 - e1);
      break;
    case 1:
      p.x1 = xi * e1 * (1 - e2 * e3);
      p.x2 = xi * (1 - e1);
      p.y1 = xi * e1 * (1 - e2);
      p.y2 = xi * (1 - e1 * (1 - e2));
      break;
    case 2:
      p.x1 = xi * (1 - e1 * (1 - e2 * (1 - e3)));
      p.x2 = xi * e1 * (1 - e2 * (1 - e3));
      p.y1 = xi * (1 - e1);
      p.y2 = xi * e1 * (1 - e2);
      break;
    case 3:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1 * (1 - e2);
      p.y1 = xi * (1 - e1 * (1 - e2 * (1 - e3)));
      p.y2 = xi * e1 * (1 - e2 * (1 - e3));
      break;
    case 4:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1 * (1 - e2 * e3);
      p.y1 = xi * (1 - e1 * (1 - e2));
      p.y2 = xi * e1 * (1 - e2);
      break;
    case 5:
      p.x1 = xi * (1 - e1 * (1 - e2));
      p.x2 = xi * e1 * (1 - e2);
      p.y1 = xi * (1 - e1);
      p.y2 = xi * e1 * (1 - e2 * e3);
      break;
  }
}

void map_edge(Real xi, Real e1, Real e2, Real e3, int simplex, RefPoint& p) {
  p.jac = xi * xi * xi * e1 * e1;
  switch (simplex) {
    case 0:
      p.x1 = xi * (1 - e1 * e3);
      p.x2 = xi * e1 * e3;
      p.y1 = xi * (1 - e1);
      p.y2 = xi * e1 * (1 - e2);
      break;
    case 1:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1;
      p.y1 = xi * (1 - e1 * e2);
      p.y2 = xi * e1 * e2 * (1 - e3);
      p.jac *= e2;
      break;
    case 2:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1 * (1 - e2);
      p.y1 = xi * (1 - e1 * e2 * e3);
      p.y2 = xi * e1 * e2 * e3;
      p.jac *= e2;
      break;
    case 3:
      p.x1 = xi * (1 - e1 * e2);
      p.x2 = xi * e1 * e2 * (1 - e3);
      p.y1 = xi * (1 - e1);
      p.y2 = xi * e1;
      p.jac *= e2;
      break;
    case 4:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1 * (1 - e2 * e3);
      p.y1 = xi * (1 - e1 * e2);
      p.y2 = xi * e1 * e2;
      p.jac *= e2;
      break;
  }
}

void map_vertex(Real xi, Real e1, Real e2, Real e3, int simplex, RefPoint& p) {
  p.jac = xi * xi * xi * e2;
  switch (simplex) {
    case 0:
      p.x1 = xi * (1 - e1);
      p.x2 = xi * e1;
      p.y1 = xi * e2 * (1 - e3);
      p.y2 = xi * e2 * e3;
      break;
    case 1:
      p.x1 = xi * e2 * (1 - e3);
      p.x2 = xi * e2 * e3;
      p.y1 = xi * (1 - e1);
      p.y2 = xi * e1;
      break;
  }
}

PairRule build_pair_rule(PairCase c, int order) {
  PairRule rule;
  if (c == PairCase::Disjoint) {
    const QuadratureRule tri = gauss_rule(order);
    const Index n = tri.weights.size();
    rule.xr1.reserve(n * n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        rule.xr1.push_back(tri.points(i, 0));
        rule.xr2.push_back(tri.points(i, 1));
        rule.yr1.push_back(tri.points(j, 0));
        rule.yr2.push_back(tri.points(j, 1));
        rule.w.push_back(tri.weights(i) * tri.weights(j));
      }
    return rule;
  }

  const int n_simplices = c == PairCase::Identical ? 6
      : c == PairCase::Edge                        ? 5
                                                   : 2;
  std::vector<Real> gx, gw;
  gauss_legendre_01(order, gx, gw);
  const int n = order;
  rule.xr1.reserve(static_cast<std::size_t>(n_simplices) * n * n * n * n);
  RefPoint p{};
  for (int s = 0; s < n_simplices; ++s)
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
          for (int i3 = 0; i3 < n; ++i3) {
            switch (c) {
              case PairCase::Identical:
                map_identical(gx[i0], gx[i1], gx[i2], gx[i3], s, p);
                break;
              case PairCase::Edge:
                map_edge(gx[i0], gx[i1], gx[i2], gx[i3], s, p);
                break;
              default:
                map_vertex(gx[i0], gx[i1], gx[i2], gx[i3], s, p);
                break;
            }
            rule.xr1.push_back(p.x1);
            rule.xr2.push_back(p.x2);
            rule.yr1.push_back(p.y1);
            rule.yr2.push_back(p.y2);
            rule.w.push_back(p.jac * gw[i0] * gw[i1] * gw[i2] * gw[i3]);
          }
  return rule;
}

}  // namespace

const PairRule& pair_rule(PairCase c, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PairRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(static_cast<int>(c), order);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_pair_rule(c, order)).first;
  return it->second;
}

}  // namespace hmbem
