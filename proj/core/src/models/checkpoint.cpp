// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/models/checkpoint.h"

#include <cstring>
#include <sstream>
#include <stdexcept>

namespace avi::models {

namespace {

constexpr char kMagic[4] = {'A', 'V', 'C', 'K'};

nlohmann::json Describe(const NamedTensor& t) {
  nlohmann::json j = {{"name", t.name}, {"shape", t.tensor.shape}, {"dtype", DTypeName(t.tensor.dtype)}};
  if (!t.layer.empty()) {
    j["layer"] = t.layer;
    j["role"] = t.role;
  }
  return j;
}

}  // namespace

void Checkpoint::Save(const std::filesystem::path& path) const {
  nlohmann::json header = {{"format", kCheckpointFormat}, {"model", config.ToJson()}, {"meta", meta}};
  header["params"] = nlohmann::json::array();
  header["aux"] = nlohmann::json::array();
  for (const auto& p : params) header["params"].push_back(Describe(p));
  for (const auto& a : aux) header["aux"].push_back(Describe(a));
  const std::string text = header.dump();
  std::ostringstream out;
  out.write(kMagic, 4);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out << text;
  for (const auto& p : params) WriteTensor(out, p.tensor);
  for (const auto& a : aux) WriteTensor(out, a.tensor);
  WriteFileAtomic(path, out.str());
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  std::istringstream in(ReadFileBytes(path));
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path.string() + " is not a checkpoint");
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), 8) || len > (1u << 30))
    throw std::runtime_error("corrupt checkpoint header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw std::runtime_error("truncated checkpoint header");
  const auto header = nlohmann::json::parse(text);
  if (header.value("format", "") != kCheckpointFormat)
    throw std::runtime_error("unsupported checkpoint format in " + path.string());
  Checkpoint c;
  c.config = ModelConfig::FromJson(header.at("model"));
  c.meta = header.value("meta", nlohmann::json::object());
  auto read = [&](const nlohmann::json& list, std::vector<NamedTensor>& out) {
    for (const auto& d : list) {
      NamedTensor t;
      t.name = d.at("name").get<std::string>();
      t.layer = d.value("layer", "");
      t.role = d.value("role", "");
      t.tensor = ReadTensor(in);
      if (t.tensor.shape != d.at("shape").get<std::vector<std::uint32_t>>())
        throw std::runtime_error("checkpoint tensor " + t.name + " disagrees with its header shape");
      out.push_back(std::move(t));
    }
  };
  read(header.at("params"), c.params);
  read(header.at("aux"), c.aux);
  return c;
}

const NamedTensor* Checkpoint::FindAux(const std::string& name) const {
  for (const auto& a : aux)
    if (a.name == name) return &a;
  return nullptr;
}

template <typename S>
Checkpoint Capture(Model<S>& model, DType dtype) {
  Checkpoint c;
  c.config = model.Config();
  for (auto* p : model.Parameters())
    c.params.push_back({p->Name(), p->layer, p->role,
                        Tensor::FromMatrix(p->value.template cast<double>(), dtype)});
  return c;
}

template <typename S>
void Restore(const Checkpoint& ckpt, Model<S>& model) {
  const auto params = model.Parameters();
  if (params.size() != ckpt.params.size())
    throw std::runtime_error("checkpoint holds " + std::to_string(ckpt.params.size()) +
                             " parameters, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    const auto& t = ckpt.params[i];
    const RowMatrix m = t.tensor.ToMatrix();
    if (t.name != p->Name() || m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw std::runtime_error("checkpoint parameter " + t.name + " does not match " + p->Name());
    p->value = m.template cast<S>();
  }
}

template Checkpoint Capture<float>(Model<float>&, DType);
template Checkpoint Capture<double>(Model<double>&, DType);
template void Restore<float>(const Checkpoint&, Model<float>&);
template void Restore<double>(const Checkpoint&, Model<double>&);

}  // namespace avi::models
