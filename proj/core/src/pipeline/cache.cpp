// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/cache.h"

#include <fstream>
#include <stdexcept>

#include "avinpaint/common/tensor_file.h"

namespace avi::pipeline {

nlohmann::json LoadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void SaveJsonFile(const std::filesystem::path& path, const nlohmann::json& j) {
  WriteFileAtomic(path, j.dump(1) + "\n");
}

FeatureCache::FeatureCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FeatureCache::MelPath(const std::string& id) const { return FeatureDir() / (id + ".mel.avt"); }
std::filesystem::path FeatureCache::MotionPath(const std::string& id) const { return FeatureDir() / (id + ".motion.avt"); }
std::filesystem::path FeatureCache::CleanPath(const std::string& id) const { return FeatureDir() / (id + ".clean.avt"); }
std::filesystem::path FeatureCache::MetaPath(const std::string& id) const { return FeatureDir() / (id + ".meta.json"); }
std::filesystem::path FeatureCache::MaskPath(const std::string& id) const { return MaskDir() / (id + ".mask.json"); }
std::filesystem::path FeatureCache::MaskedPath(const std::string& id) const { return MaskDir() / (id + ".masked.avt"); }

Manifest FeatureCache::LoadManifest() const {
  const auto path = root_ / "manifest.json";
  if (!std::filesystem::exists(path))
    throw std::runtime_error(root_.string() + " is not a prepared cache (run prepare first)");
  return Manifest::Load(path, false);
}

nlohmann::json FeatureCache::LoadMeta(const std::string& id) const { return LoadJsonFile(MetaPath(id)); }

dsp::MelSpectrogram FeatureCache::LoadMel(const std::string& id) const {
  const auto meta = LoadMeta(id);
  dsp::MelSpectrogram mel;
  mel.values = LoadMatrix(MelPath(id));
  mel.norm.db_floor = meta.at("db_floor").get<double>();
  mel.norm.reference_power = meta.at("reference_power").get<double>();
  mel.has_norm = true;
  return mel;
}

RowMatrix FeatureCache::LoadRawMotion(const std::string& id) const { return LoadMatrix(MotionPath(id)); }

RowMatrix FeatureCache::LoadMotion(const std::string& id) const {
  return visual::Normalize01(LoadRawMotion(id), LoadStats());
}

visual::FeatureStats FeatureCache::LoadStats() const {
  return visual::FeatureStats::FromJson(LoadJsonFile(root_ / "visual_stats.json"));
}

dsp::Waveform FeatureCache::LoadClean(const std::string& id) const {
  const Tensor t = LoadTensor(CleanPath(id));
  dsp::Waveform w;
  w.samples = t.values;
  w.sample_rate = LoadMeta(id).at("sample_rate").get<int>();
  return w;
}

corruption::Mask FeatureCache::LoadMask(const std::string& id) const {
  return corruption::Mask::FromJson(LoadJsonFile(MaskPath(id)));
}

corruption::MaskedSpectrogram FeatureCache::LoadMasked(const std::string& id) const {
  corruption::MaskedSpectrogram a;
  a.values = LoadMatrix(MaskedPath(id));
  a.mask = LoadMask(id);
  if (a.mask.Frames() != a.values.rows())
    throw std::runtime_error("mask of " + id + " does not match its spectrogram");
  return a;
}

bool FeatureCache::HasMasks() const { return std::filesystem::exists(MaskDir() / "mask_config.json"); }

}  // namespace avi::pipeline
