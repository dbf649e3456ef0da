#ifndef HMBEM_REPORT_HPP
#define HMBEM_REPORT_HPP

#include <string>

#include "hmbem/amvm.hpp"
#include "hmbem/baca.hpp"
#include "hmbem/expr.hpp"

namespace hmbem {

// Table emission in the layout of the paper's result tables: one row per
// named operator with MB and percentage columns (one decimal digit).
std::string storage_csv(const StorageReport& rep);
std::string storage_json(const StorageReport& rep);

std::string amvm_csv(const AmvmReport& rep);
std::string amvm_json(const AmvmReport& rep);

std::string baca_csv(const BacaReport& rep);
std::string baca_json(const BacaReport& rep);

void write_file(const std::string& path, const std::string& content);
void write_vector(const std::string& path, const Vec& v);

}  // namespace hmbem

#endif
