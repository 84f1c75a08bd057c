// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/manifest.h"

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "avinpaint/common/tensor_file.h"

namespace avi::pipeline {

void Manifest::Validate(bool check_files) const {
  std::set<std::string> ids;
  std::map<std::string, std::string> speaker_split;
  for (const auto& e : entries) {
    if (e.utterance_id.empty()) throw std::invalid_argument("manifest entry without utterance_id");
    if (e.utterance_id.find('/') != std::string::npos || e.utterance_id.find('\\') != std::string::npos)
      throw std::invalid_argument("utterance_id may not contain path separators: " + e.utterance_id);
    if (!ids.insert(e.utterance_id).second)
      throw std::invalid_argument("duplicate utterance_id: " + e.utterance_id);
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw std::invalid_argument("utterance " + e.utterance_id + " has unknown split '" + e.split + "'");
    const auto [it, inserted] = speaker_split.emplace(e.speaker_id, e.split);
    if (!inserted && it->second != e.split)
      throw std::invalid_argument("speaker " + e.speaker_id + " appears in both " + it->second +
                                  " and " + e.split + " splits");
    if (check_files) {
      if (!std::filesystem::exists(e.wav_path))
        throw std::invalid_argument("missing audio for " + e.utterance_id + ": " + e.wav_path);
      if (!std::filesystem::exists(e.landmarks_path))
        throw std::invalid_argument("missing landmarks for " + e.utterance_id + ": " + e.landmarks_path);
    }
  }
}

std::vector<const ManifestEntry*> Manifest::Split(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

const ManifestEntry* Manifest::Find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.utterance_id == id) return &e;
  return nullptr;
}

nlohmann::json Manifest::ToJson() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries)
    list.push_back({{"utterance_id", e.utterance_id}, {"wav_path", e.wav_path},
                    {"landmarks_path", e.landmarks_path}, {"transcript", e.transcript},
                    {"speaker_id", e.speaker_id}, {"split", e.split}});
  return {{"entries", list}};
}

Manifest Manifest::FromJson(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_array() ? j : j.at("entries");
  Manifest m;
  for (const auto& e : list) {
    for (const auto& [key, value] : e.items())
      if (key != "utterance_id" && key != "wav_path" && key != "landmarks_path" &&
          key != "transcript" && key != "speaker_id" && key != "split")
        throw std::invalid_argument("unknown manifest key: " + key);
    m.entries.push_back({e.at("utterance_id").get<std::string>(), e.at("wav_path").get<std::string>(),
                         e.at("landmarks_path").get<std::string>(), e.value("transcript", ""),
                         e.at("speaker_id").get<std::string>(), e.at("split").get<std::string>()});
  }
  return m;
}

Manifest Manifest::Load(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  Manifest m = FromJson(nlohmann::json::parse(in));
  const auto base = std::filesystem::absolute(path).parent_path();
  for (auto& e : m.entries) {
    if (std::filesystem::path(e.wav_path).is_relative()) e.wav_path = (base / e.wav_path).lexically_normal().string();
    if (std::filesystem::path(e.landmarks_path).is_relative())
      e.landmarks_path = (base / e.landmarks_path).lexically_normal().string();
  }
  m.Validate(check_files);
  return m;
}

void Manifest::Save(const std::filesystem::path& path) const {
  WriteFileAtomic(path, ToJson().dump(1) + "\n");
}

}  // namespace avi::pipeline
