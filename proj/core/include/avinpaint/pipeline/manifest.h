// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace avi::pipeline {

struct ManifestEntry {
  std::string utterance_id;
  std::string wav_path;        // absolute after Load
  std::string landmarks_path;  // absolute after Load
  std::string transcript;
  std::string speaker_id;
  std::string split;           // train, val or test
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  // Checks unique non-empty ids, known splits, that no speaker appears in
  // two splits, and (optionally) that every referenced file exists. Throws
  // std::invalid_argument listing the first problem.
  void Validate(bool check_files = true) const;

  std::vector<const ManifestEntry*> Split(const std::string& split) const;
  const ManifestEntry* Find(const std::string& id) const;

  // {"entries": [...]}; paths are written as given.
  nlohmann::json ToJson() const;
  static Manifest FromJson(const nlohmann::json& j);

  // Relative media paths are resolved against the manifest's directory.
  static Manifest Load(const std::filesystem::path& path, bool check_files = true);
  void Save(const std::filesystem::path& path) const;
};

}  // namespace avi::pipeline
