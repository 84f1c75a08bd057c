// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "avinpaint/common/matrix.h"

namespace avi {

enum class DType : std::uint32_t { kF32 = 1, kF64 = 2 };

DType ParseDType(std::string_view name);
std::string_view DTypeName(DType t);

// An n-dimensional array held in double precision; `dtype` is the storage
// precision on disk.
struct Tensor {
  DType dtype = DType::kF64;
  std::vector<std::uint32_t> shape;
  std::vector<double> values;

  std::size_t Elements() const;
  // Rank-2 view; rank-1 tensors become a single row.
  RowMatrix ToMatrix() const;
  static Tensor FromMatrix(const RowMatrix& m, DType dtype = DType::kF64);
};

// Record layout: "AVI1", u32 dtype, u32 ndim, u32 dims[ndim], then the
// little-endian payload. f32 storage rounds values to single precision.
void WriteTensor(std::ostream& out, const Tensor& t);
Tensor ReadTensor(std::istream& in);

void SaveTensor(const std::filesystem::path& path, const Tensor& t);
Tensor LoadTensor(const std::filesystem::path& path);

inline void SaveMatrix(const std::filesystem::path& path, const RowMatrix& m,
                       DType dtype = DType::kF64) {
  SaveTensor(path, Tensor::FromMatrix(m, dtype));
}
inline RowMatrix LoadMatrix(const std::filesystem::path& path) { return LoadTensor(path).ToMatrix(); }

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partial file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);
std::string ReadFileBytes(const std::filesystem::path& path);

}  // namespace avi
