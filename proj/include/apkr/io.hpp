#pragma once

#include <string>

#include "apkr/matrix.hpp"

namespace apkr {

// Binary matrix format: magic "APKR", u16 format version, u64 rows, u64 cols
// (little-endian), then rows*cols IEEE-754 binary64 values in row-major
// order. A path ending in ".csv" selects plain CSV instead (one row per
// line, values printed with %.17g so rewriting is byte-identical).
void write_matrix(const std::string& path, const DenseMatrix& m);
DenseMatrix read_matrix(const std::string& path);

void write_vector(const std::string& path, const Vector& v);
Vector read_vector(const std::string& path);

}  // namespace apkr
