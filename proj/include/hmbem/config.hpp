#ifndef HMBEM_CONFIG_HPP
#define HMBEM_CONFIG_HPP

#include <map>
#include <string>

#include "hmbem/amvm.hpp"
#include "hmbem/baca.hpp"
#include "hmbem/mesh.hpp"

namespace hmbem {

// Flat key-value run configuration; see docs/config_format.md for the key
// list. Unset keys keep the defaults below.
struct RunConfig {
  std::string mesh_path;
  BoundaryLabeling labeling;

  Real E = 1.0;
  Real nu = 0.3;

  ClusteringConfig clustering;   // b_min = 15, beta = 0.8
  QuadratureConfig quadrature;
  Real eps_aca = 1e-6;
  int lookahead = 2;
  int max_rank = 1 << 30;

  AmvmConfig amvm;               // theta = 0.7, eps = 1e-6
  BacaConfig baca;               // theta = 0.8, alpha = 10, eps = 1e-4
  int start_rank_v = 8;
  int start_rank_k = 4;
  int amvm_start_rank = 2;

  Vec3 source_point = Vec3(5.0, 5.0, 5.0);
  Vec3 source_direction = Vec3(1.0, 1.0, 1.0).normalized();
  // constant-load case instead of the manufactured field when set
  std::string load_predicate;
  Vec3 neumann_load = Vec3(0.0, 0.0, -0.1);

  Index oracle_cap = 1100;       // max scalar DOF count for dense oracles
  std::string output_dir = "out";

  OperatorConfig operator_config(bool coarse) const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
void validate(const RunConfig& cfg);

}  // namespace hmbem

#endif
