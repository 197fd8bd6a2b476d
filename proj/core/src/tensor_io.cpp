// SPDX-License-Identifier: Apache-2.0
#include "dysfl/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace dysfl {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'S', 'F'};
constexpr u32 kVersion = 1;

void put_u32(std::ostream& os, u32 v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, u64 v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
  static_assert(sizeof(float) == 4);
  put_u32(os, std::bit_cast<u32>(v));
}

u32 get_u32(std::istream& is, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("tensor file truncated: " + path.string());
  }
  u32 v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<u32>(b[i]) << (8 * i);
  return v;
}

u64 get_u64(std::istream& is, const std::filesystem::path& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError("tensor file truncated: " + path.string());
  }
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
  return v;
}

}  // namespace

u64 TensorData::element_count() const {
  u64 n = 1;
  for (u64 d : dims) n *= d;
  return n;
}

void write_tensor(const TensorData& data, const std::filesystem::path& path) {
  if (data.dims.empty()) throw DataError("write_tensor: no dimensions");
  if (data.dims.size() > 255) throw DataError("write_tensor: too many dimensions");
  if (data.element_count() != data.values.size()) {
    throw DataError("write_tensor: dims imply " + std::to_string(data.element_count()) +
                    " elements, payload has " + std::to_string(data.values.size()));
  }
  for (float v : data.values) {
    if (!std::isfinite(v)) throw DataError("write_tensor: non-finite value in payload");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  const unsigned char ndim = static_cast<unsigned char>(data.dims.size());
  os.write(reinterpret_cast<const char*>(&ndim), 1);
  for (u64 d : data.dims) put_u64(os, d);
  for (float v : data.values) put_f32(os, v);
  if (!os) throw DataError("write failed: " + path.string());
}

TensorData read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open tensor file: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("bad tensor magic in: " + path.string());
  }
  const u32 version = get_u32(is, path);
  if (version != kVersion) {
    throw DataError("unsupported tensor version " + std::to_string(version) + " in: " +
                    path.string());
  }
  unsigned char ndim = 0;
  if (!is.read(reinterpret_cast<char*>(&ndim), 1) || ndim == 0) {
    throw DataError("bad tensor header in: " + path.string());
  }
  TensorData data;
  data.dims.resize(ndim);
  for (auto& d : data.dims) d = get_u64(is, path);
  const u64 count = data.element_count();
  data.values.resize(count);
  for (u64 i = 0; i < count; ++i) data.values[i] = std::bit_cast<float>(get_u32(is, path));
  // Any trailing bytes mean the header and payload disagree.
  char extra;
  if (is.read(&extra, 1)) {
    throw DataError("tensor payload larger than dims imply: " + path.string());
  }
  return data;
}

namespace {

template <typename Mat>
TensorData matrix_to_tensor(const Mat& m) {
  TensorData data;
  data.dims = {static_cast<u64>(m.rows()), static_cast<u64>(m.cols())};
  data.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data.values.push_back(static_cast<float>(m(r, c)));
    }
  }
  return data;
}

TensorData read_2d(const std::filesystem::path& path) {
  TensorData data = read_tensor(path);
  if (data.dims.size() != 2) {
    throw DataError("expected a 2-D tensor in: " + path.string());
  }
  return data;
}

}  // namespace

void write_matrix(const Eigen::MatrixXf& m, const std::filesystem::path& path) {
  write_tensor(matrix_to_tensor(m), path);
}

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  write_tensor(matrix_to_tensor(m), path);
}

Eigen::MatrixXf read_matrix(const std::filesystem::path& path) {
  const TensorData data = read_2d(path);
  Eigen::MatrixXf m(static_cast<Eigen::Index>(data.dims[0]),
                    static_cast<Eigen::Index>(data.dims[1]));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data.values[k++];
  }
  return m;
}

Eigen::MatrixXd read_matrix_d(const std::filesystem::path& path) {
  return read_matrix(path).cast<double>();
}

}  // namespace dysfl
