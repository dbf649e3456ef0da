#include "hmbem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hmbem {

namespace {

struct PredicateClause {
  int axis = 0;
  int op = 0;  // 0: <, 1: >, 2: <=, 3: >=
  Real value = 0.0;

  bool eval(const Vec3& p) const {
    const Real x = p[axis];
    switch (op) {
      case 0: return x < value;
      case 1: return x > value;
      case 2: return x <= value;
      default: return x >= value;
    }
  }
};

std::vector<PredicateClause> parse_predicate(const std::string& text) {
  std::vector<PredicateClause> clauses;
  std::stringstream ss(text);
  std::string term;
  while (std::getline(ss, term, '|')) {
    term.erase(std::remove_if(term.begin(), term.end(), ::isspace), term.end());
    if (term.empty()) continue;
    PredicateClause c;
    if (term.size() < 4 || term[0] != 'x' || term[1] < '1' || term[1] > '3')
      throw MeshError("labeling predicate: bad clause '" + term + "'");
    c.axis = term[1] - '1';
    std::size_t pos = 2;
    if (term.compare(pos, 2, "<=") == 0) {
      c.op = 2;
      pos += 2;
    } else if (term.compare(pos, 2, ">=") == 0) {
      c.op = 3;
      pos += 2;
    } else if (term[pos] == '<') {
      c.op = 0;
      pos += 1;
    } else if (term[pos] == '>') {
      c.op = 1;
      pos += 1;
    } else {
      throw MeshError("labeling predicate: bad operator in '" + term + "'");
    }
    try {
      c.value = std::stod(term.substr(pos));
    } catch (const std::exception&) {
      throw MeshError("labeling predicate: bad value in '" + term + "'");
    }
    clauses.push_back(c);
  }
  if (clauses.empty())
    throw MeshError("labeling predicate: no clauses in '" + text + "'");
  return clauses;
}

void validate_admissible(const SurfaceMesh& mesh) {
  // Every directed edge must occur exactly once and its reverse must exist:
  // the surface is closed and consistently oriented.
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const auto key = std::make_pair(tri[e], tri[(e + 1) % 3]);
      if (++edges[key] > 1)
        throw MeshError("non-admissible triangulation: repeated directed edge");
    }
  for (const auto& [key, cnt] : edges)
    if (!edges.count({key.second, key.first}))
      throw MeshError("non-admissible triangulation: open edge " +
                      std::to_string(key.first) + "-" +
                      std::to_string(key.second));

  // No two distinct triangles may share all three vertices.
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto& inc = mesh.vertex_triangles[v];
    for (std::size_t a = 0; a < inc.size(); ++a)
      for (std::size_t b = a + 1; b < inc.size(); ++b) {
        const auto& ta = mesh.triangles[inc[a]];
        const auto& tb = mesh.triangles[inc[b]];
        int shared = 0;
        for (int i : ta)
          for (int j : tb)
            if (i == j) ++shared;
        if (shared > 2)
          throw MeshError("non-admissible triangulation: triangles " +
                          std::to_string(inc[a]) + " and " +
                          std::to_string(inc[b]) + " share a face");
      }
  }
}

}  // namespace

Real SurfaceMesh::triangle_diameter(int t) const {
  const auto c = corners(t);
  return std::max({(c[0] - c[1]).norm(), (c[1] - c[2]).norm(),
                   (c[0] - c[2]).norm()});
}

Real SurfaceMesh::distance(const Vec3& p) const {
  Real best = std::numeric_limits<Real>::max();
  for (int t = 0; t < num_triangles(); ++t) {
    const auto c = corners(t);
    const Vec3 e0 = c[1] - c[0], e1 = c[2] - c[0], d = c[0] - p;
    const Real a = e0.dot(e0), b = e0.dot(e1), cc = e1.dot(e1);
    const Real d0 = e0.dot(d), d1 = e1.dot(d);
    const Real det = a * cc - b * b;
    Real s = b * d1 - cc * d0, tt = b * d0 - a * d1;
    if (s + tt <= det) {
      if (s < 0) {
        if (tt < 0) {  // region 4
          if (d0 < 0) {
            tt = 0;
            s = std::clamp(-d0 / a, 0.0, 1.0);
          } else {
            s = 0;
            tt = std::clamp(-d1 / cc, 0.0, 1.0);
          }
        } else {  // region 3
          s = 0;
          tt = std::clamp(-d1 / cc, 0.0, 1.0);
        }
      } else if (tt < 0) {  // region 5
        tt = 0;
        s = std::clamp(-d0 / a, 0.0, 1.0);
      } else {  // region 0
        s /= det;
        tt /= det;
      }
    } else {
      if (s < 0) {  // region 2
        const Real tmp0 = b + d0, tmp1 = cc + d1;
        if (tmp1 > tmp0) {
          s = std::clamp((tmp1 - tmp0) / (a - 2 * b + cc), 0.0, 1.0);
          tt = 1 - s;
        } else {
          s = 0;
          tt = std::clamp(-d1 / cc, 0.0, 1.0);
        }
      } else if (tt < 0) {  // region 6
        const Real tmp0 = b + d1, tmp1 = a + d0;
        if (tmp1 > tmp0) {
          tt = std::clamp((tmp1 - tmp0) / (a - 2 * b + cc), 0.0, 1.0);
          s = 1 - tt;
        } else {
          tt = 0;
          s = std::clamp(-d0 / a, 0.0, 1.0);
        }
      } else {  // region 1
        s = std::clamp((cc + d1 - b - d0) / (a - 2 * b + cc), 0.0, 1.0);
        tt = 1 - s;
      }
    }
    const Vec3 q = c[0] + s * e0 + tt * e1;
    best = std::min(best, (q - p).norm());
  }
  return best;
}

std::function<bool(const Vec3&)> compile_predicate(const std::string& text) {
  auto clauses = parse_predicate(text);
  return [clauses = std::move(clauses)](const Vec3& p) {
    for (const auto& c : clauses)
      if (c.eval(p)) return true;
    return false;
  };
}

SurfaceMesh load_mesh(const std::string& path,
                      const BoundaryLabeling& labeling) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);

  auto next_token_line = [&in, &path]() {
    std::string line;
    while (std::getline(in, line)) {
      const auto pos = line.find('#');
      if (pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    throw MeshError("unexpected end of mesh file " + path);
  };

  std::string header = next_token_line();
  {
    std::stringstream ss(header);
    std::string tag;
    ss >> tag;
    if (tag != "OFF") throw MeshError("mesh file " + path + ": missing OFF header");
  }
  int nv = 0, nt = 0, ne = 0;
  {
    std::stringstream ss(next_token_line());
    if (!(ss >> nv >> nt >> ne) || nv <= 0 || nt <= 0)
      throw MeshError("mesh file " + path + ": bad counts line");
  }

  SurfaceMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (int v = 0; v < nv; ++v) {
    std::stringstream ss(next_token_line());
    if (!(ss >> mesh.vertices(v, 0) >> mesh.vertices(v, 1) >>
          mesh.vertices(v, 2)))
      throw MeshError("mesh file " + path + ": bad vertex line");
  }
  mesh.triangles.resize(nt);
  for (int t = 0; t < nt; ++t) {
    std::stringstream ss(next_token_line());
    int k = 0;
    auto& tri = mesh.triangles[t];
    if (!(ss >> k >> tri[0] >> tri[1] >> tri[2]) || k != 3)
      throw MeshError("mesh file " + path + ": bad triangle line");
    for (int i : tri)
      if (i < 0 || i >= nv)
        throw MeshError("mesh file " + path + ": vertex index out of range");
  }

  // geometry caches
  mesh.normals.resize(nt);
  mesh.centroids.resize(nt);
  mesh.areas.resize(nt);
  Real scale = 0.0;
  for (int v = 0; v < nv; ++v) scale = std::max(scale, mesh.vertex(v).norm());
  for (int t = 0; t < nt; ++t) {
    const auto c = mesh.corners(t);
    const Vec3 n = (c[1] - c[0]).cross(c[2] - c[0]);
    const Real area = 0.5 * n.norm();
    if (area <= 1e-14 * scale * scale)
      throw MeshError("degenerate triangle " + std::to_string(t));
    mesh.areas[t] = area;
    mesh.normals[t] = n / (2.0 * area);
    mesh.centroids[t] = (c[0] + c[1] + c[2]) / 3.0;
  }
  mesh.vertex_triangles.resize(nv);
  for (int t = 0; t < nt; ++t)
    for (int v : mesh.triangles[t]) mesh.vertex_triangles[v].push_back(t);

  validate_admissible(mesh);

  // boundary labels
  mesh.dirichlet.assign(nt, 0);
  if (!labeling.label_file.empty()) {
    std::ifstream lf(labeling.label_file);
    if (!lf) throw MeshError("cannot open label file " + labeling.label_file);
    for (int t = 0; t < nt; ++t) {
      std::string tok;
      if (!(lf >> tok) || (tok != "D" && tok != "N"))
        throw MeshError("label file " + labeling.label_file +
                        ": expected D or N for triangle " + std::to_string(t));
      mesh.dirichlet[t] = tok == "D" ? 1 : 0;
    }
  } else if (!labeling.dirichlet_predicate.empty()) {
    const auto pred = compile_predicate(labeling.dirichlet_predicate);
    for (int t = 0; t < nt; ++t)
      if (pred(mesh.centroids[t])) mesh.dirichlet[t] = 1;
  } else {
    throw MeshError("no boundary labeling given");
  }
  for (int t = 0; t < nt; ++t)
    (mesh.dirichlet[t] ? mesh.dirichlet_triangles : mesh.neumann_triangles)
        .push_back(t);
  if (mesh.dirichlet_triangles.empty())
    throw MeshError("empty Dirichlet part");
  return mesh;
}

DofLayout classify_dofs(const SurfaceMesh& mesh) {
  DofLayout layout;
  layout.num_triangles = mesh.num_triangles();
  layout.num_nodes = mesh.num_vertices();
  layout.dirichlet_triangle_ids = mesh.dirichlet_triangles;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    bool interior = !mesh.vertex_triangles[v].empty();
    for (int t : mesh.vertex_triangles[v])
      if (mesh.dirichlet[t]) {
        interior = false;
        break;
      }
    if (interior) layout.neumann_interior_nodes.push_back(v);
  }
  return layout;
}

}  // namespace hmbem
