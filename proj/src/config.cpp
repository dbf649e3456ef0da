#include "hmbem/config.hpp"

#include <fstream>
#include <sstream>

namespace hmbem {

OperatorConfig RunConfig::operator_config(bool coarse) const {
  OperatorConfig oc;
  oc.clustering = clustering;
  oc.quadrature = quadrature;
  oc.eps_aca = eps_aca;
  oc.lookahead = lookahead;
  oc.max_rank = max_rank;
  if (coarse) {
    oc.coarse_rank_v = start_rank_v;
    oc.coarse_rank_k = start_rank_k;
  }
  return oc;
}

namespace {

std::map<std::string, std::string> read_pairs(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      const auto e = s.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key");
    if (kv.count(key)) throw ConfigError("config: duplicate key " + key);
    kv[key] = value;
  }
  return kv;
}

Real to_real(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const Real r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + k + ": '" + v + "'");
  }
}

int to_int(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + k + ": '" + v + "'");
  }
}

Vec3 to_vec3(const std::string& k, const std::string& v) {
  std::stringstream ss(v);
  Vec3 out;
  if (!(ss >> out[0] >> out[1] >> out[2]))
    throw ConfigError("config: bad vector value for " + k + ": '" + v + "'");
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::stringstream ss(text);
  auto kv = read_pairs(ss);
  RunConfig cfg;
  auto take = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::pair<bool, std::string>{false, {}};
    auto v = it->second;
    kv.erase(it);
    return std::pair<bool, std::string>{true, v};
  };

  if (auto [ok, v] = take("mesh"); ok) cfg.mesh_path = v;
  if (auto [ok, v] = take("labels"); ok) cfg.labeling.label_file = v;
  if (auto [ok, v] = take("dirichlet_predicate"); ok)
    cfg.labeling.dirichlet_predicate = v;
  if (auto [ok, v] = take("E"); ok) cfg.E = to_real("E", v);
  if (auto [ok, v] = take("nu"); ok) cfg.nu = to_real("nu", v);
  if (auto [ok, v] = take("b_min"); ok)
    cfg.clustering.b_min = to_int("b_min", v);
  if (auto [ok, v] = take("beta"); ok) cfg.clustering.beta = to_real("beta", v);
  if (auto [ok, v] = take("eps_aca"); ok) cfg.eps_aca = to_real("eps_aca", v);
  if (auto [ok, v] = take("lookahead"); ok)
    cfg.lookahead = to_int("lookahead", v);
  if (auto [ok, v] = take("max_rank"); ok) cfg.max_rank = to_int("max_rank", v);
  if (auto [ok, v] = take("amvm_theta"); ok)
    cfg.amvm.theta = to_real("amvm_theta", v);
  if (auto [ok, v] = take("eps_amvm"); ok)
    cfg.amvm.eps_amvm = to_real("eps_amvm", v);
  if (auto [ok, v] = take("amvm_max_iterations"); ok)
    cfg.amvm.max_iterations = to_int("amvm_max_iterations", v);
  if (auto [ok, v] = take("baca_theta"); ok)
    cfg.baca.theta = to_real("baca_theta", v);
  if (auto [ok, v] = take("alpha"); ok) cfg.baca.alpha = to_real("alpha", v);
  if (auto [ok, v] = take("eps_baca"); ok)
    cfg.baca.eps_baca = to_real("eps_baca", v);
  if (auto [ok, v] = take("inner_tol0"); ok)
    cfg.baca.inner_tol0 = to_real("inner_tol0", v);
  if (auto [ok, v] = take("baca_max_outer"); ok)
    cfg.baca.max_outer = to_int("baca_max_outer", v);
  if (auto [ok, v] = take("promote_selected_only"); ok)
    cfg.baca.promote_selected_only = to_int("promote_selected_only", v) != 0;
  if (auto [ok, v] = take("use_bpcg"); ok)
    cfg.baca.use_bpcg = to_int("use_bpcg", v) != 0;
  if (auto [ok, v] = take("start_rank_v"); ok)
    cfg.start_rank_v = to_int("start_rank_v", v);
  if (auto [ok, v] = take("start_rank_k"); ok)
    cfg.start_rank_k = to_int("start_rank_k", v);
  if (auto [ok, v] = take("amvm_start_rank"); ok)
    cfg.amvm_start_rank = to_int("amvm_start_rank", v);
  if (auto [ok, v] = take("quad_disjoint_order"); ok)
    cfg.quadrature.disjoint_order = to_int("quad_disjoint_order", v);
  if (auto [ok, v] = take("quad_singular_order"); ok)
    cfg.quadrature.singular_order = to_int("quad_singular_order", v);
  if (auto [ok, v] = take("source_point"); ok)
    cfg.source_point = to_vec3("source_point", v);
  if (auto [ok, v] = take("source_direction"); ok)
    cfg.source_direction = to_vec3("source_direction", v).normalized();
  if (auto [ok, v] = take("load_predicate"); ok) cfg.load_predicate = v;
  if (auto [ok, v] = take("neumann_load"); ok)
    cfg.neumann_load = to_vec3("neumann_load", v);
  if (auto [ok, v] = take("oracle_cap"); ok)
    cfg.oracle_cap = to_int("oracle_cap", v);
  if (auto [ok, v] = take("output_dir"); ok) cfg.output_dir = v;

  if (!kv.empty()) throw ConfigError("config: unknown key " + kv.begin()->first);
  cfg.amvm.lookahead_steps = cfg.lookahead;
  cfg.baca.lookahead_steps = cfg.lookahead;
  validate(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate(const RunConfig& cfg) {
  if (cfg.E <= 0) throw ConfigError("config: E must be positive");
  if (cfg.nu <= 0 || cfg.nu >= 0.5)
    throw ConfigError("config: nu must lie in (0, 1/2)");
  if (cfg.clustering.b_min < 1)
    throw ConfigError("config: b_min must be >= 1");
  if (cfg.clustering.beta <= 0)
    throw ConfigError("config: beta must be positive");
  if (cfg.eps_aca <= 0) throw ConfigError("config: eps_aca must be positive");
  if (cfg.lookahead < 0)
    throw ConfigError("config: lookahead must be non-negative");
  if (cfg.amvm.theta <= 0 || cfg.amvm.theta >= 1)
    throw ConfigError("config: amvm_theta must lie in (0,1)");
  if (cfg.amvm.eps_amvm <= 0)
    throw ConfigError("config: eps_amvm must be positive");
  if (cfg.baca.theta <= 0 || cfg.baca.theta >= 1)
    throw ConfigError("config: baca_theta must lie in (0,1)");
  if (cfg.baca.alpha < 0) throw ConfigError("config: alpha must be >= 0");
  if (cfg.baca.eps_baca <= 0)
    throw ConfigError("config: eps_baca must be positive");
  if (cfg.start_rank_v < 1 || cfg.start_rank_k < 1 || cfg.amvm_start_rank < 1)
    throw ConfigError("config: starting ranks must be >= 1");
  if (cfg.quadrature.disjoint_order < 1 || cfg.quadrature.disjoint_order > 6)
    throw ConfigError("config: quad_disjoint_order must lie in 1..6");
  if (cfg.quadrature.singular_order < 1 || cfg.quadrature.singular_order > 10)
    throw ConfigError("config: quad_singular_order must lie in 1..10");
}

}  // namespace hmbem
