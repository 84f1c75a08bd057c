// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "avinpaint/common/tensor_file.h"
#include "avinpaint/corruption/mask.h"
#include "avinpaint/dsp/analysis.h"
#include "avinpaint/losses/lexicon.h"
#include "avinpaint/models/model.h"
#include "avinpaint/training/train.h"
#include "avinpaint/visual/motion.h"

namespace avi::pipeline {

nlohmann::json DspToJson(const dsp::DspConfig& c);
dsp::DspConfig DspFromJson(const nlohmann::json& j);
nlohmann::json VisualToJson(const visual::VisualConfig& c);
visual::VisualConfig VisualFromJson(const nlohmann::json& j);

struct LabelConfig {
  losses::LabelMode mode = losses::LabelMode::kPhones;
  std::string lexicon;  // JSON lexicon path; empty selects the bundled Grid lexicon

  losses::Tokenizer MakeTokenizer() const;
};

struct PathConfig {
  std::string manifest;
  std::string cache;
  std::string run;     // checkpoints and training logs
  std::string output;  // in-painted spectrograms, audio, reports
};

// Everything a run needs. Relative paths are resolved against the directory
// of the config file they came from.
struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  DType precision = DType::kF32;
  dsp::DspConfig dsp;
  visual::VisualConfig visual;
  corruption::MaskSpec mask;
  models::ModelConfig model;
  training::TrainConfig train;
  LabelConfig labels;
  PathConfig paths;
  std::string split = "test";  // what inpaint and evaluate process

  void Validate() const;
  nlohmann::json ToJson() const;
  // Every level rejects unknown keys; missing keys keep defaults.
  static RunConfig FromJson(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);

  // Short hex digest of ToJson().
  std::string Digest() const;
};

// 16 hex digits of FNV-1a over the bytes.
std::string HexDigest(std::string_view bytes);

}  // namespace avi::pipeline
