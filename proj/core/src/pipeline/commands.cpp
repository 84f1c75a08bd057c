// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/commands.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "avinpaint/common/random.h"
#include "avinpaint/common/tensor_file.h"
#include "avinpaint/dsp/analysis.h"
#include "avinpaint/models/checkpoint.h"
#include "avinpaint/pipeline/image.h"
#include "avinpaint/pipeline/workers.h"

namespace avi::pipeline {

namespace {

// Bump when the cached representation changes.
constexpr const char* kCacheVersion = "avinpaint-cache/1";

std::filesystem::path Required(const std::string& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string("config paths.") + what + " is not set");
  return p;
}

std::vector<std::string> SplitIds(const Manifest& m, const std::string& split) {
  std::vector<std::string> ids;
  for (const auto* e : m.Split(split)) ids.push_back(e->utterance_id);
  return ids;
}

void WriteResolvedConfig(const std::filesystem::path& dir, const RunConfig& config) {
  SaveJsonFile(dir / "resolved_config.json", config.ToJson());
}

}  // namespace

// --- prepare ---

PrepareSummary CmdPrepare(const RunConfig& config) {
  config.Validate();
  const Manifest manifest = Manifest::Load(Required(config.paths.manifest, "manifest"));
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  std::filesystem::create_directories(cache.FeatureDir());
  const std::string settings = DspToJson(config.dsp).dump() + VisualToJson(config.visual).dump() + kCacheVersion;

  std::atomic<int> computed{0}, skipped{0};
  ParallelFor(static_cast<int>(manifest.entries.size()), config.workers, [&](int i) {
    const ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
    const std::string wav_bytes = ReadFileBytes(e.wav_path);
    const std::string lm_bytes = ReadFileBytes(e.landmarks_path);
    const std::string digest = HexDigest(HexDigest(wav_bytes) + HexDigest(lm_bytes) + settings);
    if (std::filesystem::exists(cache.MetaPath(e.utterance_id)) && std::filesystem::exists(cache.MelPath(e.utterance_id)) &&
        std::filesystem::exists(cache.MotionPath(e.utterance_id)) && std::filesystem::exists(cache.CleanPath(e.utterance_id))) {
      const auto meta = cache.LoadMeta(e.utterance_id);
      if (meta.value("digest", "") == digest) {
        ++skipped;
        return;
      }
    }
    const dsp::Waveform raw = dsp::ReadWav(e.wav_path);
    const visual::LandmarkSequence landmarks = visual::ReadLandmarkCsv(e.landmarks_path);
    const double audio_s = raw.DurationSeconds();
    const double video_s = landmarks.Frames() / landmarks.fps;
    if (std::abs(audio_s - video_s) > 2.0 / landmarks.fps)
      throw std::runtime_error("utterance " + e.utterance_id + ": audio lasts " + std::to_string(audio_s) +
                               " s but landmarks cover " + std::to_string(video_s) + " s");
    const dsp::Waveform clean = dsp::Condition(raw, config.dsp);
    const dsp::MelSpectrogram mel = dsp::Analyze(clean, config.dsp);
    const int frames = static_cast<int>(mel.values.rows());
    const RowMatrix motion = visual::ExtractMotion(landmarks, frames, config.visual);

    SaveMatrix(cache.MelPath(e.utterance_id), mel.values);
    SaveMatrix(cache.MotionPath(e.utterance_id), motion);
    Tensor wave;
    wave.shape = {1, static_cast<std::uint32_t>(clean.samples.size())};
    wave.values = clean.samples;
    SaveTensor(cache.CleanPath(e.utterance_id), wave);
    SaveJsonFile(cache.MetaPath(e.utterance_id),
                 {{"utterance_id", e.utterance_id}, {"digest", digest}, {"frames", frames},
                  {"n_mels", mel.values.cols()}, {"motion_dims", motion.cols()},
                  {"sample_rate", clean.sample_rate}, {"samples", clean.samples.size()},
                  {"reference_power", mel.norm.reference_power}, {"db_floor", mel.norm.db_floor},
                  {"video_frames", landmarks.Frames()}});
    ++computed;
  });

  // Normalization ranges come from the training split only.
  visual::FeatureStats stats(config.visual.FeatureDims());
  for (const auto* e : manifest.Split("train")) stats.Accumulate(cache.LoadRawMotion(e->utterance_id));
  if (stats.Empty()) throw std::invalid_argument("manifest has no train utterances for visual statistics");
  const std::string stats_text = stats.ToJson().dump(1) + "\n";
  const auto stats_path = cache.Root() / "visual_stats.json";
  if (!std::filesystem::exists(stats_path) || ReadFileBytes(stats_path) != stats_text)
    WriteFileAtomic(stats_path, stats_text);
  const std::string manifest_text = manifest.ToJson().dump(1) + "\n";
  const auto manifest_path = cache.Root() / "manifest.json";
  if (!std::filesystem::exists(manifest_path) || ReadFileBytes(manifest_path) != manifest_text)
    WriteFileAtomic(manifest_path, manifest_text);
  WriteResolvedConfig(cache.Root(), config);
  return {computed.load(), skipped.load()};
}

// --- mask ---

MaskSummary CmdMask(const RunConfig& config) {
  config.Validate();
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  const Manifest manifest = cache.LoadManifest();
  std::filesystem::create_directories(cache.MaskDir());
  ParallelFor(static_cast<int>(manifest.entries.size()), config.workers, [&](int i) {
    const std::string& id = manifest.entries[static_cast<std::size_t>(i)].utterance_id;
    const RowMatrix mel = LoadMatrix(cache.MelPath(id));
    const corruption::Mask mask =
        corruption::SampleMask(DeriveSeed(config.seed, id), static_cast<int>(mel.rows()), config.mask);
    const auto masked = corruption::ApplyMask(mel, mask);
    SaveJsonFile(cache.MaskPath(id), mask.ToJson());
    SaveMatrix(cache.MaskedPath(id), masked.values);
  });
  SaveJsonFile(cache.MaskDir() / "mask_config.json", {{"seed", config.seed}, {"spec", config.mask.ToJson()}});
  return {static_cast<int>(manifest.entries.size()), config.seed};
}

// --- train ---

models::ModelConfig ResolveModelConfig(const RunConfig& config) {
  models::ModelConfig m = config.model;
  m.spec_dim = config.dsp.n_mels;
  m.visual_dim = config.visual.FeatureDims();
  if (m.HasCtcHead()) m.vocab = config.labels.MakeTokenizer().Vocab().Size();
  m.Validate();
  return m;
}

std::vector<training::Sample> LoadSamples(const FeatureCache& cache, const std::string& split,
                                          const RunConfig& config) {
  if (!cache.HasMasks()) throw std::runtime_error("cache has no masks (run mask first)");
  const Manifest manifest = cache.LoadManifest();
  const bool ctc = config.model.HasCtcHead();
  const bool vis = config.model.UsesVisual();
  std::optional<losses::Tokenizer> tokenizer;
  if (ctc) tokenizer = config.labels.MakeTokenizer();
  const auto ids = SplitIds(manifest, split);
  std::vector<training::Sample> samples(ids.size());
  ParallelFor(static_cast<int>(ids.size()), config.workers, [&](int i) {
    const std::string& id = ids[static_cast<std::size_t>(i)];
    training::Sample& s = samples[static_cast<std::size_t>(i)];
    s.id = id;
    s.target = LoadMatrix(cache.MelPath(id));
    s.input = cache.LoadMasked(id);
    if (vis) s.visual = cache.LoadMotion(id);
    if (ctc) s.labels = tokenizer->Encode(manifest.Find(id)->transcript);
  });
  return samples;
}

namespace {

template <typename S>
TrainSummary RunTraining(const RunConfig& config, bool resume) {
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  const std::filesystem::path run = Required(config.paths.run, "run");
  std::filesystem::create_directories(run);
  RunConfig resolved = config;
  resolved.model = ResolveModelConfig(config);
  resolved.train.seed = config.seed;
  WriteResolvedConfig(run, resolved);

  const auto train = LoadSamples(cache, "train", resolved);
  const auto val = LoadSamples(cache, "val", resolved);
  if (train.empty()) throw std::runtime_error("no train utterances in the cache");
  if (val.empty()) throw std::runtime_error("no val utterances in the cache");

  TrainSummary summary;
  summary.best_checkpoint = run / "checkpoint_best.avck";
  summary.last_checkpoint = run / "checkpoint_last.avck";
  summary.log = run / "train_log.jsonl";

  models::Model<S> model(resolved.model, config.seed);
  std::optional<models::Checkpoint> resume_ckpt;
  if (resume) {
    if (!std::filesystem::exists(summary.last_checkpoint))
      throw std::runtime_error("nothing to resume: " + summary.last_checkpoint.string() + " is missing");
    resume_ckpt = models::Checkpoint::Load(summary.last_checkpoint);
    if (resume_ckpt->config.ToJson() != resolved.model.ToJson())
      throw std::runtime_error("resume checkpoint was trained with a different model configuration");
  }

  training::FitOptions options;
  options.resume = resume_ckpt ? &*resume_ckpt : nullptr;
  options.checkpoint_dtype = config.precision;
  int saved_best = resume_ckpt ? resume_ckpt->meta.at("early_stopping").at("best_epoch").get<int>() : 0;
  const bool with_ctc = resolved.model.HasCtcHead();
  options.on_epoch = [&](const training::EpochLog&, const training::FitResult& r) {
    std::string text;
    for (const auto& e : r.log) text += e.ToJson(with_ctc).dump() + "\n";
    WriteFileAtomic(summary.log, text);
    if (r.best_epoch != saved_best) {
      r.best.Save(summary.best_checkpoint);
      saved_best = r.best_epoch;
    }
    r.last.Save(summary.last_checkpoint);
  };
  summary.fit = training::Fit(model, train, val, resolved.train, options);
  if (!std::filesystem::exists(summary.best_checkpoint) && !summary.fit.best.params.empty())
    summary.fit.best.Save(summary.best_checkpoint);
  return summary;
}

}  // namespace

TrainSummary CmdTrain(const RunConfig& config, bool resume) {
  config.Validate();
  return config.precision == DType::kF64 ? RunTraining<double>(config, resume)
                                         : RunTraining<float>(config, resume);
}

// --- inpaint ---

namespace {

template <typename S>
InpaintSummary RunInpaint(const RunConfig& config, const InpaintOptions& options) {
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  const std::filesystem::path out = Required(config.paths.output, "output");
  std::filesystem::create_directories(out);
  const Manifest manifest = cache.LoadManifest();
  const auto ids = SplitIds(manifest, config.split);

  std::optional<models::Model<S>> model;
  std::string ckpt_path;
  if (options.mode == InpaintMode::kModel) {
    ckpt_path = options.checkpoint.empty()
                    ? (std::filesystem::path(Required(config.paths.run, "run")) / "checkpoint_best.avck").string()
                    : options.checkpoint;
    const auto ckpt = models::Checkpoint::Load(ckpt_path);
    model.emplace(ckpt.config, 0);
    models::Restore(ckpt, *model);
    if (ckpt.config.spec_dim != config.dsp.n_mels)
      throw std::runtime_error("checkpoint spectrogram width differs from the cache");
    if (ckpt.config.UsesVisual() && ckpt.config.visual_dim != config.visual.FeatureDims())
      throw std::runtime_error("checkpoint visual width differs from the cache");
  }
  if (options.mode != InpaintMode::kGroundTruth && !cache.HasMasks())
    throw std::runtime_error("cache has no masks (run mask first)");

  ParallelFor(static_cast<int>(ids.size()), config.workers, [&](int i) {
    const std::string& id = ids[static_cast<std::size_t>(i)];
    const dsp::MelSpectrogram truth = cache.LoadMel(id);
    corruption::MaskedSpectrogram a;
    if (options.mode == InpaintMode::kGroundTruth) {
      a.mask = corruption::Mask::AllIntact(static_cast<int>(truth.values.rows()), config.mask.hop_ms);
      a.values = truth.values;
    } else {
      a = cache.LoadMasked(id);
    }
    dsp::MelSpectrogram o = truth;
    switch (options.mode) {
      case InpaintMode::kModel: {
        RowMatrix vis;
        if (model->Config().UsesVisual()) vis = cache.LoadMotion(id);
        const auto r = models::Inpaint(*model, a, model->Config().UsesVisual() ? &vis : nullptr);
        o.values = r.o;
        SaveMatrix(out / (id + ".raw.avt"), r.y);
        break;
      }
      case InpaintMode::kMaskedInput: o.values = a.values; break;
      case InpaintMode::kGroundTruth: break;
    }
    SaveMatrix(out / (id + ".mel.avt"), o.values);
    if (options.waveforms) {
      const dsp::Waveform w =
          options.mode == InpaintMode::kGroundTruth ? cache.LoadClean(id) : dsp::Synthesize(o, config.dsp);
      Tensor t;
      t.shape = {1, static_cast<std::uint32_t>(w.samples.size())};
      t.values = w.samples;
      SaveTensor(out / (id + ".audio.avt"), t);
      dsp::WriteWav(out / (id + ".wav"), w);
    }
    if (options.png) WritePng(out / (id + ".png"), RenderTriptych(a.values, o.values, truth.values, a.mask));
  });

  const char* mode = options.mode == InpaintMode::kModel         ? "model"
                     : options.mode == InpaintMode::kMaskedInput ? "masked-input"
                                                                 : "ground-truth";
  SaveJsonFile(out / "inpaint_index.json", {{"mode", mode}, {"checkpoint", ckpt_path}, {"split", config.split},
                                            {"waveforms", options.waveforms}, {"ids", ids},
                                            {"config_digest", config.Digest()}});
  WriteResolvedConfig(out, config);
  return {ids};
}

}  // namespace

InpaintSummary CmdInpaint(const RunConfig& config, const InpaintOptions& options) {
  config.Validate();
  return config.precision == DType::kF64 ? RunInpaint<double>(config, options)
                                         : RunInpaint<float>(config, options);
}

// --- evaluate ---

metrics::MetricsReport CmdEvaluate(const RunConfig& config, const EvaluateOptions& options) {
  config.Validate();
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  const std::filesystem::path out = Required(config.paths.output, "output");
  const auto index = LoadJsonFile(out / "inpaint_index.json");
  const auto ids = index.at("ids").get<std::vector<std::string>>();
  const bool have_audio = index.value("waveforms", true);
  if (options.stoi && !have_audio)
    throw std::runtime_error("in-painted set has no waveforms; rerun inpaint with audio or disable STOI");

  metrics::MetricsReport report;
  report.per_sample.resize(ids.size());
  std::mutex status_mutex;
  report.pesq_status = "not configured";
  ParallelFor(static_cast<int>(ids.size()), config.workers, [&](int i) {
    const std::string& id = ids[static_cast<std::size_t>(i)];
    if (!std::filesystem::exists(cache.MelPath(id)))
      throw std::runtime_error("no reference features for in-painted utterance " + id);
    const RowMatrix x = LoadMatrix(cache.MelPath(id));
    const auto o_path = out / (id + ".mel.avt");
    if (!std::filesystem::exists(o_path)) throw std::runtime_error("missing in-painted spectrogram for " + id);
    const RowMatrix o = LoadMatrix(o_path);
    metrics::SampleMetrics& m = report.per_sample[static_cast<std::size_t>(i)];
    m.id = id;
    m.mse = metrics::Mse(x, o);
    m.psnr_db = metrics::PsnrFromMse(m.mse);
    if (!have_audio) return;
    dsp::Waveform clean = cache.LoadClean(id);
    dsp::Waveform restored;
    restored.sample_rate = clean.sample_rate;
    restored.samples = LoadTensor(out / (id + ".audio.avt")).values;
    const std::size_t n = std::min(clean.samples.size(), restored.samples.size());
    clean.samples.resize(n);
    restored.samples.resize(n);
    if (options.stoi) m.stoi = metrics::Stoi(clean, restored);
    const auto pesq = metrics::Pesq(clean, restored, options.pesq_bin);
    m.pesq = pesq.score;
    std::lock_guard<std::mutex> lock(status_mutex);
    if (pesq.configured && report.pesq_status == "not configured") report.pesq_status = "ok";
    if (pesq.configured && !pesq.score && report.pesq_status == "ok") report.pesq_status = pesq.error;
  });
  report.config_digest = config.Digest();
  report.Finalize();
  SaveJsonFile(out / "report.json", report.ToJson());
  WriteFileAtomic(out / "report.csv", report.ToCsv());
  return report;
}

// --- mask statistics ---

nlohmann::json MaskStats::ToJson() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : gap_count_histogram) hist[std::to_string(k)] = v;
  return {{"masks", masks}, {"frames", frames}, {"violations", violations},
          {"first_violations", first_violations}, {"mean_total_frames", mean_total},
          {"std_total_frames", std_total}, {"mean_gaps", mean_gaps},
          {"mean_gap_length", mean_gap_length}, {"min_total_frames", min_total},
          {"max_total_frames", max_total}, {"min_gap_frames", min_gap},
          {"gap_count_histogram", hist}};
}

MaskStats ComputeMaskStats(const std::vector<corruption::Mask>& masks, const corruption::MaskSpec& spec) {
  MaskStats s;
  s.masks = static_cast<int>(masks.size());
  if (masks.empty()) return s;
  s.frames = masks.front().Frames();
  s.min_total = std::numeric_limits<int>::max();
  s.min_gap = std::numeric_limits<int>::max();
  double sum = 0, sq = 0, gaps = 0, gap_len = 0;
  long gap_n = 0;
  for (const auto& m : masks) {
    const auto v = corruption::AuditMask(m, spec);
    s.violations += static_cast<long>(v.size());
    for (const auto& msg : v)
      if (s.first_violations.size() < 10) s.first_violations.push_back(msg);
    const int total = m.MaskedFrames();
    sum += total;
    sq += static_cast<double>(total) * total;
    s.min_total = std::min(s.min_total, total);
    s.max_total = std::max(s.max_total, total);
    gaps += static_cast<double>(m.Gaps().size());
    ++s.gap_count_histogram[static_cast<int>(m.Gaps().size())];
    for (const auto& g : m.Gaps()) {
      gap_len += g.length;
      ++gap_n;
      s.min_gap = std::min(s.min_gap, g.length);
    }
  }
  const double n = static_cast<double>(masks.size());
  s.mean_total = sum / n;
  s.std_total = std::sqrt(std::max(0.0, sq / n - s.mean_total * s.mean_total));
  s.mean_gaps = gaps / n;
  s.mean_gap_length = gap_n ? gap_len / static_cast<double>(gap_n) : 0.0;
  if (gap_n == 0) s.min_gap = 0;
  return s;
}

MaskStats CmdMaskStats(const RunConfig& config) {
  const FeatureCache cache(Required(config.paths.cache, "cache"));
  if (!cache.HasMasks()) throw std::runtime_error("cache has no masks (run mask first)");
  const auto mask_config = LoadJsonFile(cache.MaskDir() / "mask_config.json");
  const auto spec = corruption::MaskSpec::FromJson(mask_config.at("spec"));
  std::vector<corruption::Mask> masks;
  for (const auto& e : cache.LoadManifest().entries) masks.push_back(cache.LoadMask(e.utterance_id));
  return ComputeMaskStats(masks, spec);
}

MaskStats CmdMaskStats(const corruption::MaskSpec& spec, int count, int frames, std::uint64_t seed) {
  std::vector<corruption::Mask> masks;
  masks.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    masks.push_back(corruption::SampleMask(DeriveSeed(seed, "mask:" + std::to_string(i)), frames, spec));
  return ComputeMaskStats(masks, spec);
}

// --- gradient check ---

nn::GradCheckReport CmdGradCheck(models::Variant variant, std::uint64_t seed) {
  models::ModelConfig mc;
  mc.variant = variant;
  mc.hidden = 4;
  mc.fc_dim = 8;
  mc.spec_dim = 8;
  mc.visual_dim = 8;
  mc.vocab = 3;
  // A large weight keeps the CTC branch's share of every gradient well
  // above rounding noise.
  mc.lambda = 1.0;
  models::Model<double> model(mc, seed);

  Rng rng(DeriveSeed(seed, "gradcheck-data"));
  constexpr int kSteps = 6;
  std::vector<training::Sample> samples(2);
  const std::vector<std::vector<int>> labels = {{0, 1, 1}, {2}};
  for (std::size_t b = 0; b < samples.size(); ++b) {
    auto& s = samples[b];
    s.id = "micro" + std::to_string(b);
    s.target = RowMatrix(kSteps, mc.spec_dim);
    for (Eigen::Index i = 0; i < s.target.size(); ++i) s.target.data()[i] = rng.Uniform();
    const auto mask = corruption::Mask::FromGaps(kSteps, {{2, 2}});
    s.input = corruption::ApplyMask(s.target, mask);
    if (mc.UsesVisual()) {
      s.visual = RowMatrix(kSteps, mc.visual_dim);
      for (Eigen::Index i = 0; i < s.visual.size(); ++i) s.visual.data()[i] = rng.Uniform();
    }
    s.labels = labels[b];
  }
  std::vector<const training::Sample*> batch = {&samples[0], &samples[1]};
  return nn::GradCheck(
      [&](nn::Tape<double>& tape) { return training::BatchLoss(tape, model, batch, false, nullptr); },
      model.Parameters());
}

SynthSummary CmdSynth(const SynthConfig& config, const std::filesystem::path& out_dir) {
  return WriteSynthDataset(config, out_dir);
}

}  // namespace avi::pipeline
