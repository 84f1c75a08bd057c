// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/metrics/metrics.h"
#include "avinpaint/nn/grad_check.h"
#include "avinpaint/pipeline/cache.h"
#include "avinpaint/pipeline/config.h"
#include "avinpaint/pipeline/synth.h"
#include "avinpaint/training/train.h"

namespace avi::pipeline {

struct PrepareSummary {
  int computed = 0;
  int skipped = 0;  // cached features whose inputs and settings are unchanged
};

// Manifest -> feature cache (paths.manifest -> paths.cache).
PrepareSummary CmdPrepare(const RunConfig& config);

struct MaskSummary {
  int written = 0;
  std::uint64_t seed = 0;
};

// Samples one mask per cached utterance from DeriveSeed(config.seed, id)
// and stores the masked spectrograms next to the features.
MaskSummary CmdMask(const RunConfig& config);

// Builds training samples for one split of a prepared, masked cache.
std::vector<training::Sample> LoadSamples(const FeatureCache& cache, const std::string& split,
                                          const RunConfig& config);

// The configuration's model settings with widths taken from the data.
models::ModelConfig ResolveModelConfig(const RunConfig& config);

struct TrainSummary {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path log;
  training::FitResult fit;
};

// Writes run/checkpoint_best.avck, run/checkpoint_last.avck,
// run/train_log.jsonl and run/resolved_config.json. With `resume`, training
// continues from run/checkpoint_last.avck.
TrainSummary CmdTrain(const RunConfig& config, bool resume = false);

enum class InpaintMode {
  kModel,        // restore with a trained checkpoint
  kMaskedInput,  // pass the masked input through (the "no restoration" row)
  kGroundTruth,  // emit the clean features, for metric sanity checks
};

struct InpaintOptions {
  InpaintMode mode = InpaintMode::kModel;
  std::string checkpoint;  // default run/checkpoint_best.avck
  bool waveforms = true;
  bool png = false;
};

struct InpaintSummary {
  std::vector<std::string> ids;
};

// For every utterance of config.split writes output/<id>.mel.avt (the
// composited spectrogram), output/<id>.raw.avt (model output y),
// output/<id>.audio.avt and output/<id>.wav (8 kHz Griffin-Lim audio),
// optionally output/<id>.png, plus output/inpaint_index.json.
InpaintSummary CmdInpaint(const RunConfig& config, const InpaintOptions& options = {});

struct EvaluateOptions {
  bool stoi = true;
  std::string pesq_bin;  // overrides the environment variable
};

// Scores output/ against the cache; writes output/report.json and
// output/report.csv.
metrics::MetricsReport CmdEvaluate(const RunConfig& config, const EvaluateOptions& options = {});

struct MaskStats {
  int masks = 0;
  int frames = 0;
  long violations = 0;
  std::vector<std::string> first_violations;
  double mean_total = 0.0;
  double std_total = 0.0;
  double mean_gaps = 0.0;
  double mean_gap_length = 0.0;
  int min_total = 0;
  int max_total = 0;
  int min_gap = 0;
  std::map<int, int> gap_count_histogram;

  nlohmann::json ToJson() const;
};

MaskStats ComputeMaskStats(const std::vector<corruption::Mask>& masks, const corruption::MaskSpec& spec);
// Statistics of the mask set stored in the cache.
MaskStats CmdMaskStats(const RunConfig& config);
// Statistics of `count` fresh draws of length `frames`.
MaskStats CmdMaskStats(const corruption::MaskSpec& spec, int count, int frames, std::uint64_t seed);

// Finite-difference check of a micro model (visual 8, spec 8, hidden 4,
// T 6, vocab 3) in double precision, loss as used in training.
nn::GradCheckReport CmdGradCheck(models::Variant variant, std::uint64_t seed);

SynthSummary CmdSynth(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace avi::pipeline
