#pragma once
// On-disk formats shared repo-wide. Everything is little-endian.
//
//   Tensor file:   "MLTNSR01" | u32 dtype (1 = f64) | u32 rank | u64 dims[rank]
//                  | payload row-major
//   Dataset file:  "MLDATA01" | u64 rows | u64 cols | f64 sparsity | u64 seed
//                  | X row-major f64 | y as i32[rows]
//
// CSV numbers are written with shortest-roundtrip formatting so identical values
// always produce identical bytes.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace monolab::io {

std::string format_double(double v);

void write_tensor(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_tensor(const std::string& path);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header);

// Writes `text` to `path` atomically enough for our purposes (truncate + write).
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace monolab::io
