// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"
#include "avinpaint/corruption/mask.h"
#include "avinpaint/dsp/mel.h"
#include "avinpaint/dsp/waveform.h"
#include "avinpaint/pipeline/manifest.h"
#include "avinpaint/visual/motion.h"

namespace avi::pipeline {

// Layout of a prepared feature cache:
//   manifest.json                  copy of the ingested manifest
//   visual_stats.json              motion ranges over the train split
//   features/<id>.mel.avt          normalized log-mel, T x n_mels
//   features/<id>.motion.avt       raw motion vectors upsampled to T
//   features/<id>.clean.avt        conditioned waveform (1 x samples)
//   features/<id>.meta.json        normalization, digest, shapes
//   masks/mask_config.json         seed and MaskSpec of the mask set
//   masks/<id>.mask.json           mask
//   masks/<id>.masked.avt          masked spectrogram a
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path root);

  const std::filesystem::path& Root() const { return root_; }
  std::filesystem::path FeatureDir() const { return root_ / "features"; }
  std::filesystem::path MaskDir() const { return root_ / "masks"; }
  std::filesystem::path MelPath(const std::string& id) const;
  std::filesystem::path MotionPath(const std::string& id) const;
  std::filesystem::path CleanPath(const std::string& id) const;
  std::filesystem::path MetaPath(const std::string& id) const;
  std::filesystem::path MaskPath(const std::string& id) const;
  std::filesystem::path MaskedPath(const std::string& id) const;

  Manifest LoadManifest() const;
  nlohmann::json LoadMeta(const std::string& id) const;
  dsp::MelSpectrogram LoadMel(const std::string& id) const;
  RowMatrix LoadRawMotion(const std::string& id) const;
  // Raw motion scaled by the train-split statistics.
  RowMatrix LoadMotion(const std::string& id) const;
  visual::FeatureStats LoadStats() const;
  dsp::Waveform LoadClean(const std::string& id) const;
  corruption::Mask LoadMask(const std::string& id) const;
  corruption::MaskedSpectrogram LoadMasked(const std::string& id) const;
  bool HasMasks() const;

 private:
  std::filesystem::path root_;
};

nlohmann::json LoadJsonFile(const std::filesystem::path& path);
void SaveJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace avi::pipeline
