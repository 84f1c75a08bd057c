// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avinpaint/dsp/waveform.h"
#include "avinpaint/pipeline/manifest.h"
#include "avinpaint/visual/motion.h"

namespace avi::pipeline {

// A toy syllable: a voiced tone with two resonances, articulated by moving
// the lips along a fixed direction in (width, height) space.
struct Syllable {
  std::string name;
  std::vector<std::string> phones;
  double f0_hz;
  double formant1_hz;
  double formant2_hz;
  double lip_angle;  // radians; height change ~ cos, width change ~ sin
};

const std::vector<Syllable>& SyllableInventory();

struct SynthConfig {
  int n_train = 200;
  int n_val = -1;  // -1: max(1, n_test / 2)
  int n_test = 50;
  std::uint64_t seed = 0;
  int source_rate = 25000;
  double seconds = 3.0;
  double fps = 25.0;
  int train_speakers = 8;
  int val_speakers = 2;
  int test_speakers = 2;
  int workers = 1;

  int ValCount() const { return n_val >= 0 ? n_val : std::max(1, n_test / 2); }
  void Validate() const;
};

struct SyllableSpan {
  int syllable = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct SynthUtterance {
  std::string id;
  std::string speaker;
  std::string split;
  std::vector<SyllableSpan> spans;
  std::string transcript;
  dsp::Waveform audio;
  visual::LandmarkSequence landmarks;
};

// One utterance, fully determined by (config.seed, id, speaker).
SynthUtterance GenerateUtterance(const SynthConfig& config, const std::string& id,
                                 const std::string& speaker, const std::string& split);

// The neutral 68-point face of `speaker`.
RowMatrix RestFace(const SynthConfig& config, const std::string& speaker);

struct SynthSummary {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::filesystem::path lexicon_path;
};

// Writes audio/<id>.wav, landmarks/<id>.csv, manifest.json, lexicon.json and
// truth.json (syllable spans per utterance) under out_dir. Speakers are
// split-disjoint.
SynthSummary WriteSynthDataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace avi::pipeline
