#include "hmbem/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace hmbem {

namespace {

std::string fixed1(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string sci(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

}  // namespace

std::string storage_csv(const StorageReport& rep) {
  std::string out = "operator,mb,percent,tail_mb,dense_mb\n";
  for (const auto& r : rep.rows)
    out += r.name + "," + fixed1(r.mb) + "," + fixed1(r.percent) + "," +
           fixed1(r.tail_mb) + "," + fixed1(r.dense_mb) + "\n";
  return out;
}

std::string storage_json(const StorageReport& rep) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rep.rows)
    j.push_back({{"operator", r.name},
                 {"mb", r.mb},
                 {"percent", r.percent},
                 {"tail_mb", r.tail_mb},
                 {"dense_mb", r.dense_mb}});
  return j.dump(2);
}

std::string amvm_csv(const AmvmReport& rep) {
  std::string out =
      "iteration,gamma,gamma_pk,marked,cumulative_rank,storage_mb,e_hat\n";
  for (const auto& it : rep.iterations)
    out += std::to_string(it.k) + "," + sci(it.gamma) + "," +
           sci(it.gamma_pk) + "," + std::to_string(it.marked) + "," +
           std::to_string(it.cumulative_pivots) + "," + sci(it.storage_mb) +
           "," + sci(it.e_hat) + "\n";
  return out;
}

std::string amvm_json(const AmvmReport& rep) {
  nlohmann::json j;
  j["termination"] = rep.termination;
  j["converged"] = rep.converged;
  j["c_sp"] = rep.c_sp;
  auto& its = j["iterations"] = nlohmann::json::array();
  for (const auto& it : rep.iterations)
    its.push_back({{"k", it.k},
                   {"gamma", it.gamma},
                   {"gamma_pk", it.gamma_pk},
                   {"marked", it.marked},
                   {"cumulative_rank", it.cumulative_pivots},
                   {"storage_mb", it.storage_mb},
                   {"e_hat", it.e_hat}});
  return j.dump(2);
}

std::string baca_csv(const BacaReport& rep) {
  std::string out =
      "iteration,ek,tail_norm,residual,inner_iterations,marked_v,marked_k,"
      "marked_d,storage_mb,wall_time_s\n";
  for (const auto& it : rep.iterations)
    out += std::to_string(it.k) + "," + sci(it.ek) + "," + sci(it.tail_norm) +
           "," + sci(it.residual) + "," + std::to_string(it.inner_iterations) +
           "," + std::to_string(it.marked_v) + "," +
           std::to_string(it.marked_k) + "," + std::to_string(it.marked_d) +
           "," + sci(it.storage_mb) + "," + sci(it.wall_time_s) + "\n";
  return out;
}

std::string baca_json(const BacaReport& rep) {
  nlohmann::json j;
  j["termination"] = rep.termination;
  j["converged"] = rep.converged;
  auto& its = j["iterations"] = nlohmann::json::array();
  for (const auto& it : rep.iterations) {
    its.push_back({{"k", it.k},
                   {"ek", it.ek},
                   {"tail_norm", it.tail_norm},
                   {"residual", it.residual},
                   {"inner_tol", it.inner_tol},
                   {"inner_iterations", it.inner_iterations},
                   {"used_fallback", it.used_fallback},
                   {"marked_v", it.marked_v},
                   {"marked_k", it.marked_k},
                   {"marked_d", it.marked_d},
                   {"phases", it.phases},
                   {"storage_mb", it.storage_mb},
                   {"wall_time_s", it.wall_time_s}});
  }
  return j.dump(2);
}

void write_file(const std::string& path, const std::string& content) {
  const auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

void write_vector(const std::string& path, const Vec& v) {
  std::string body;
  body.reserve(static_cast<std::size_t>(v.size()) * 16);
  char buf[64];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v[i]);
    body += buf;
  }
  write_file(path, body);
}

}  // namespace hmbem
