// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/common/tensor_file.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace avi {

namespace {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

constexpr char kMagic[4] = {'A', 'V', 'I', '1'};
constexpr std::uint32_t kMaxRank = 8;

void PutU32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t GetU32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("truncated tensor header");
  return v;
}

}  // namespace

DType ParseDType(std::string_view name) {
  if (name == "f32") return DType::kF32;
  if (name == "f64") return DType::kF64;
  throw std::invalid_argument("unknown dtype: " + std::string(name));
}

std::string_view DTypeName(DType t) { return t == DType::kF32 ? "f32" : "f64"; }

std::size_t Tensor::Elements() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

RowMatrix Tensor::ToMatrix() const {
  if (shape.size() > 2) throw std::invalid_argument("tensor rank above 2 cannot become a matrix");
  const Eigen::Index rows = shape.size() == 2 ? shape[0] : 1;
  const Eigen::Index cols = shape.empty() ? 1 : shape.back();
  RowMatrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Tensor Tensor::FromMatrix(const RowMatrix& m, DType dtype) {
  Tensor t;
  t.dtype = dtype;
  t.shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.assign(m.data(), m.data() + m.size());
  return t;
}

void WriteTensor(std::ostream& out, const Tensor& t) {
  if (t.values.size() != t.Elements()) throw std::invalid_argument("tensor payload does not match its shape");
  if (t.shape.size() > kMaxRank) throw std::invalid_argument("tensor rank too large");
  out.write(kMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(t.dtype));
  PutU32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) PutU32(out, d);
  if (t.dtype == DType::kF64) {
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  } else {
    std::vector<float> narrow(t.values.begin(), t.values.end());
    out.write(reinterpret_cast<const char*>(narrow.data()),
              static_cast<std::streamsize>(narrow.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("tensor write failed");
}

Tensor ReadTensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a tensor record (bad magic)");
  Tensor t;
  const std::uint32_t tag = GetU32(in);
  if (tag != static_cast<std::uint32_t>(DType::kF32) && tag != static_cast<std::uint32_t>(DType::kF64))
    throw std::runtime_error("unknown tensor dtype tag " + std::to_string(tag));
  t.dtype = static_cast<DType>(tag);
  const std::uint32_t rank = GetU32(in);
  if (rank > kMaxRank) throw std::runtime_error("tensor rank too large");
  for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(GetU32(in));
  const std::size_t n = t.Elements();
  if (t.dtype == DType::kF64) {
    t.values.resize(n);
    if (!in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw std::runtime_error("truncated tensor payload");
  } else {
    std::vector<float> narrow(n);
    if (!in.read(reinterpret_cast<char*>(narrow.data()), static_cast<std::streamsize>(n * sizeof(float))))
      throw std::runtime_error("truncated tensor payload");
    t.values.assign(narrow.begin(), narrow.end());
  }
  return t;
}

void SaveTensor(const std::filesystem::path& path, const Tensor& t) {
  std::ostringstream out;
  WriteTensor(out, t);
  WriteFileAtomic(path, out.str());
}

Tensor LoadTensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Tensor t = ReadTensor(in);
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in " + path.string());
  return t;
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace avi
