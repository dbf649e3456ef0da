// Generates the surface meshes shipped under data/: unit-cube
// discretizations and a double-T beam, as voxel-boundary triangulations with
// consistent outward orientation.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

struct MeshOut {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> dirichlet;
};

using InsideFn = std::function<bool(double, double, double)>;

// Extracts the boundary surface of a voxelized solid on the lattice
// [lo, hi]^3 / n. Faces between an inside and an outside cell become two
// triangles oriented outward.
MeshOut voxel_surface(int n, double lo, double hi, const InsideFn& inside) {
  MeshOut mesh;
  auto coord = [&](int i) { return (lo * (n - i) + hi * i) / n; };
  std::map<std::array<int, 3>, int> vertex_ids;
  auto vertex = [&](int i, int j, int k) {
    const std::array<int, 3> key = {i, j, k};
    auto it = vertex_ids.find(key);
    if (it != vertex_ids.end()) return it->second;
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({coord(i), coord(j), coord(k)});
    vertex_ids[key] = id;
    return id;
  };
  auto cell_inside = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return false;
    return inside(0.5 * (coord(i) + coord(i + 1)),
                  0.5 * (coord(j) + coord(j + 1)),
                  0.5 * (coord(k) + coord(k + 1)));
  };

  // For a face with outward direction +d the lattice tangents (u, v) are
  // chosen with u x v = +d so the triangle winding gives outward normals.
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
            // lattice corner of the face
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

void label(MeshOut& mesh, const std::function<bool(double, double, double)>& d) {
  mesh.dirichlet.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double c[3] = {0, 0, 0};
    for (int v : mesh.triangles[t])
      for (int a = 0; a < 3; ++a) c[a] += mesh.vertices[v][a] / 3.0;
    mesh.dirichlet[t] = d(c[0], c[1], c[2]) ? 1 : 0;
  }
}

void write(const MeshOut& mesh, const std::string& stem) {
  std::ofstream off(stem + ".off");
  off << "OFF\n"
      << mesh.vertices.size() << " " << mesh.triangles.size() << " 0\n";
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v[0], v[1], v[2]);
    off << buf;
  }
  for (const auto& t : mesh.triangles)
    off << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";

  std::ofstream lab(stem + ".lab");
  for (char d : mesh.dirichlet) lab << (d ? "D" : "N") << "\n";
  std::printf("%s: %zu vertices, %zu triangles\n", stem.c_str(),
              mesh.vertices.size(), mesh.triangles.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesh generator"};
  app.require_subcommand(1);

  auto* cube = app.add_subcommand("cube", "unit cube [-1,1]^3");
  int n = 9;
  std::string out = "cube";
  cube->add_option("--n", n, "subdivisions per edge");
  cube->add_option("--out", out, "output stem");
  cube->callback([&]() {
    MeshOut mesh = voxel_surface(n, -1.0, 1.0,
                                 [](double, double, double) { return true; });
    label(mesh, [](double x, double y, double z) {
      return x >= 1.0 || y <= -1.0 || z >= 1.0;
    });
    write(mesh, out);
  });

  auto* beam = app.add_subcommand("beam", "double-T beam, length 2");
  int bn = 8;
  std::string bout = "beam";
  beam->add_option("--n", bn, "subdivisions across the bounding box");
  beam->add_option("--out", bout, "output stem");
  beam->callback([&]() {
    // cross-section in (y,z): flanges 2 x 0.5 top and bottom, web 1 x 1
    auto inside = [](double, double y, double z) {
      if (z >= 0.5) return true;                       // top flange
      if (z <= -0.5) return true;                      // bottom flange
      return y >= -0.5 && y <= 0.5;                    // web
    };
    MeshOut mesh = voxel_surface(bn, -1.0, 1.0, inside);
    label(mesh, [](double x, double, double) {
      return x <= -1.0 || x >= 1.0;  // clamped end cross-sections
    });
    write(mesh, bout);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
