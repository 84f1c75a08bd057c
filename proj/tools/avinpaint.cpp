// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end: synth, prepare, mask, train, inpaint, evaluate,
// maskstats, gradcheck.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "avinpaint/pipeline/commands.h"

namespace {

using namespace avi;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string precision;
};

pipeline::RunConfig LoadConfig(const GlobalFlags& g, bool required) {
  pipeline::RunConfig c;
  if (!g.config.empty()) c = pipeline::RunConfig::Load(g.config);
  else if (required) throw CLI::RequiredError("--config");
  if (g.seed) c.seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (!g.precision.empty()) c.precision = ParseDType(g.precision);
  c.Validate();
  return c;
}

void Print(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual speech in-painting toolkit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--workers", g.workers, "Parallel workers for per-utterance stages")->check(CLI::PositiveNumber);
  app.add_option("--precision", g.precision, "Model arithmetic")->check(CLI::IsMember({"f32", "f64"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic audio-visual dataset");
  pipeline::SynthConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-train", synth_cfg.n_train, "Training utterances");
  synth->add_option("--n-val", synth_cfg.n_val, "Validation utterances (default: half of --n-test)");
  synth->add_option("--n-test", synth_cfg.n_test, "Test utterances");
  synth->add_option("--source-rate", synth_cfg.source_rate, "Sample rate of the generated audio");

  auto* prepare = app.add_subcommand("prepare", "Extract spectrogram and motion features");
  auto* mask = app.add_subcommand("mask", "Sample a mask for every cached utterance");

  auto* train = app.add_subcommand("train", "Train the configured model variant");
  bool resume = false;
  train->add_flag("--resume", resume, "Continue from the last checkpoint of the run directory");

  auto* inpaint = app.add_subcommand("inpaint", "Restore masked spectrograms and resynthesize audio");
  std::string mode = "model", checkpoint, split;
  bool png = false, no_audio = false;
  inpaint->add_option("--mode", mode, "model, masked-input or ground-truth")
      ->check(CLI::IsMember({"model", "masked-input", "ground-truth"}));
  inpaint->add_option("--checkpoint", checkpoint, "Checkpoint (default: run/checkpoint_best.avck)");
  inpaint->add_option("--split", split, "Split to process (default from config)");
  inpaint->add_flag("--png", png, "Write input/restored/ground-truth PNG panels");
  inpaint->add_flag("--no-audio", no_audio, "Skip Griffin-Lim resynthesis");

  auto* evaluate = app.add_subcommand("evaluate", "Score in-painted outputs against the cache");
  bool no_stoi = false;
  std::string pesq_bin;
  evaluate->add_flag("--no-stoi", no_stoi, "Skip STOI");
  evaluate->add_option("--pesq-bin", pesq_bin, "PESQ executable (default: $AVINPAINT_PESQ_BIN)");

  auto* maskstats = app.add_subcommand("maskstats", "Audit masks stored in the cache, or fresh draws");
  int sample_count = 0, sample_frames = 149;
  maskstats->add_option("--sample", sample_count, "Draw this many fresh masks instead of reading the cache");
  maskstats->add_option("--frames", sample_frames, "Spectrogram length for fresh draws");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of a micro model");
  std::string variant = "AV-MTL-S2S";
  double tolerance = 1e-4;
  gradcheck->add_option("--variant", variant, "A-SI, AV-S2S, AV-MTL-S2S or AV-SI");
  gradcheck->add_option("--tolerance", tolerance, "Largest acceptable relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      synth_cfg.seed = g.seed.value_or(0);
      synth_cfg.workers = g.workers.value_or(1);
      const auto s = pipeline::CmdSynth(synth_cfg, synth_out);
      Print({{"manifest", s.manifest_path.string()}, {"lexicon", s.lexicon_path.string()},
             {"utterances", s.manifest.entries.size()}});
    } else if (prepare->parsed()) {
      const auto s = pipeline::CmdPrepare(LoadConfig(g, true));
      Print({{"computed", s.computed}, {"skipped", s.skipped}});
    } else if (mask->parsed()) {
      const auto s = pipeline::CmdMask(LoadConfig(g, true));
      Print({{"written", s.written}, {"seed", s.seed}});
    } else if (train->parsed()) {
      const auto config = LoadConfig(g, true);
      std::cerr << "training " << models::VariantName(config.model.variant) << " ("
                << models::ParameterCount(pipeline::ResolveModelConfig(config)) << " parameters)\n";
      const auto s = pipeline::CmdTrain(config, resume);
      Print({{"best_epoch", s.fit.best_epoch}, {"epochs", s.fit.log.size()},
             {"early_stopped", s.fit.early_stopped}, {"best_checkpoint", s.best_checkpoint.string()},
             {"log", s.log.string()}});
    } else if (inpaint->parsed()) {
      auto config = LoadConfig(g, true);
      if (!split.empty()) config.split = split;
      pipeline::InpaintOptions o;
      o.mode = mode == "model"          ? pipeline::InpaintMode::kModel
               : mode == "masked-input" ? pipeline::InpaintMode::kMaskedInput
                                        : pipeline::InpaintMode::kGroundTruth;
      o.checkpoint = checkpoint;
      o.png = png;
      o.waveforms = !no_audio;
      const auto s = pipeline::CmdInpaint(config, o);
      Print({{"utterances", s.ids.size()}, {"output", config.paths.output}});
    } else if (evaluate->parsed()) {
      pipeline::EvaluateOptions o;
      o.stoi = !no_stoi;
      o.pesq_bin = pesq_bin;
      const auto r = pipeline::CmdEvaluate(LoadConfig(g, true), o);
      auto j = r.ToJson();
      j.erase("per_sample");
      Print(j);
    } else if (maskstats->parsed()) {
      const auto config = LoadConfig(g, sample_count == 0);
      const auto s = sample_count > 0 ? pipeline::CmdMaskStats(config.mask, sample_count, sample_frames, config.seed)
                                      : pipeline::CmdMaskStats(config);
      Print(s.ToJson());
      return s.violations == 0 ? 0 : 1;
    } else if (gradcheck->parsed()) {
      const auto r = pipeline::CmdGradCheck(models::ParseVariant(variant), g.seed.value_or(0));
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& e : r.entries)
        entries.push_back({{"parameter", e.name}, {"max_rel_error", e.max_rel_error},
                           {"max_abs_error", e.max_abs_error}});
      Print({{"variant", variant}, {"max_rel_error", r.max_rel_error}, {"passed", r.Passed(tolerance)},
             {"parameters", entries}});
      return r.Passed(tolerance) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
