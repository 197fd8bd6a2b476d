// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "dysfl/types.hpp"

namespace dysfl {

/// N-dimensional float32 array with row-major (last dim fastest) layout.
struct TensorData {
  std::vector<u64> dims;
  std::vector<float> values;

  u64 element_count() const;
};

/// Binary tensor file, all little-endian:
///   magic "STSF" (4 bytes), version u32 = 1, ndim u8, ndim dims as u64,
///   payload as 32-bit floats.
/// Round trips are bit-exact for any finite payload.
void write_tensor(const TensorData& data, const std::filesystem::path& path);
TensorData read_tensor(const std::filesystem::path& path);

// 2-D conveniences. Matrices are flattened row-major regardless of Eigen's
// storage order; reading reverses it.
void write_matrix(const Eigen::MatrixXf& m, const std::filesystem::path& path);
void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXf read_matrix(const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_d(const std::filesystem::path& path);

}  // namespace dysfl
