#ifndef HMBEM_MESH_HPP
#define HMBEM_MESH_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "hmbem/types.hpp"

namespace hmbem {

// Triangulated closed surface with a Dirichlet/Neumann split of the
// triangles. Immutable after load; geometry caches are filled on load.
struct SurfaceMesh {
  Eigen::Matrix<Real, Eigen::Dynamic, 3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> dirichlet;  // per-triangle flag
  std::vector<int> dirichlet_triangles;
  std::vector<int> neumann_triangles;

  std::vector<Vec3> normals;  // outward unit normals (orientation from file)
  std::vector<Vec3> centroids;
  std::vector<Real> areas;
  std::vector<std::vector<int>> vertex_triangles;  // incident triangles

  int num_vertices() const { return static_cast<int>(vertices.rows()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  Vec3 vertex(int v) const { return vertices.row(v).transpose(); }
  std::array<Vec3, 3> corners(int t) const {
    return {vertex(triangles[t][0]), vertex(triangles[t][1]),
            vertex(triangles[t][2])};
  }

  // exact distance from a point to the surface
  Real distance(const Vec3& p) const;
  // diameter of triangle t
  Real triangle_diameter(int t) const;
};

// How triangles are assigned to the Dirichlet part. Exactly one of the two
// fields must be set: a sidecar label file (one D/N token per triangle) or a
// centroid predicate such as "x1>=1|x2<=-1|x3>=1" (disjunction of clauses
// x<axis><op><value> with op in {<,>,<=,>=}).
struct BoundaryLabeling {
  std::string label_file;
  std::string dirichlet_predicate;
};

// Parses the OFF-style format documented in docs/mesh_format.md, labels the
// triangles and validates the mesh: referenced vertices exist, areas are
// positive, the triangulation is admissible (closed, consistently oriented,
// any two triangles share one edge, one vertex or nothing) and the Dirichlet
// part is non-empty.
SurfaceMesh load_mesh(const std::string& path, const BoundaryLabeling& labeling);

// Compiles a centroid predicate ("x1>=1|x2<=-1|x3>=1") into a callable.
std::function<bool(const Vec3&)> compile_predicate(const std::string& text);

// Degrees of freedom of the mixed problem, component-major ([x; y; z]):
// tractions live on Dirichlet triangles, displacements on Neumann-interior
// nodes (all incident triangles Neumann).
struct DofLayout {
  int num_triangles = 0;
  int num_nodes = 0;
  std::vector<int> dirichlet_triangle_ids;   // sorted
  std::vector<int> neumann_interior_nodes;   // sorted

  Index t_dofs() const {
    return 3 * static_cast<Index>(dirichlet_triangle_ids.size());
  }
  Index u_dofs() const {
    return 3 * static_cast<Index>(neumann_interior_nodes.size());
  }
};

DofLayout classify_dofs(const SurfaceMesh& mesh);

}  // namespace hmbem

#endif
