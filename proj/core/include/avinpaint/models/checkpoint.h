// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/common/tensor_file.h"
#include "avinpaint/models/model.h"

namespace avi::models {

inline constexpr const char* kCheckpointFormat = "avinpaint-checkpoint/1";

struct NamedTensor {
  std::string name;
  std::string layer;  // empty for auxiliary state
  std::string role;
  Tensor tensor;
};

// File layout: "AVCK", u64 header length, JSON header, then one tensor
// record per entry of `params` followed by `aux`, in header order.
struct Checkpoint {
  ModelConfig config;
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> aux;  // optimizer moments and similar
  nlohmann::json meta = nlohmann::json::object();

  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);

  const NamedTensor* FindAux(const std::string& name) const;
};

template <typename S>
Checkpoint Capture(Model<S>& model, DType dtype);

// Copies parameter values into `model`; names and shapes must match exactly.
template <typename S>
void Restore(const Checkpoint& ckpt, Model<S>& model);

}  // namespace avi::models
