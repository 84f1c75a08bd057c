// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "avinpaint/common/tensor_file.h"
#include "avinpaint/dsp/waveform.h"
#include "avinpaint/pipeline/cache.h"
#include "avinpaint/pipeline/commands.h"
#include "avinpaint/pipeline/config.h"
#include "avinpaint/pipeline/image.h"
#include "avinpaint/pipeline/manifest.h"
#include "avinpaint/pipeline/synth.h"
#include "avinpaint/pipeline/workers.h"
#include "avinpaint/visual/motion.h"
#include "unit/test_util.h"

namespace avi::pipeline {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

RunConfig SmallRun(const fs::path& root, models::Variant variant = models::Variant::kSeq2Seq) {
  RunConfig c;
  c.seed = 5;
  c.paths.manifest = (root / "data/manifest.json").string();
  c.paths.cache = (root / "cache").string();
  c.paths.run = (root / "run").string();
  c.paths.output = (root / "out").string();
  c.labels.lexicon = (root / "data/lexicon.json").string();
  c.dsp.griffin_lim_iters = 10;
  c.model.variant = variant;
  c.model.hidden = 6;
  c.model.encoder_layers = 1;
  c.model.decoder_layers = 1;
  c.model.fc_dim = 8;
  c.train.max_epochs = 2;
  c.train.batch = 4;
  return c;
}

SynthConfig SmallSynth(std::uint64_t seed = 3) {
  SynthConfig s;
  s.seed = seed;
  s.n_train = 6;
  s.n_val = 2;
  s.n_test = 3;
  return s;
}

std::map<std::string, std::string> TreeBytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = ReadFileBytes(e.path());
  return out;
}

// --- tensor files ---

TEST(TensorFile, ByteExactRoundTrip) {
  const TempDir dir("tensor");
  Tensor t;
  t.dtype = DType::kF64;
  t.shape = {2, 3, 4};
  for (int i = 0; i < 24; ++i) t.values.push_back(std::sin(i) * 1e-3);
  SaveTensor(dir.path() / "a.avt", t);
  const Tensor back = LoadTensor(dir.path() / "a.avt");
  EXPECT_EQ(back.shape, t.shape);
  EXPECT_EQ(back.values, t.values);
  SaveTensor(dir.path() / "b.avt", back);
  EXPECT_EQ(ReadFileBytes(dir.path() / "a.avt"), ReadFileBytes(dir.path() / "b.avt"));
  const std::string bytes = ReadFileBytes(dir.path() / "a.avt");
  EXPECT_EQ(bytes.substr(0, 4), "AVI1");
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 3 * 4 + 24 * 8u);
}

TEST(TensorFile, F32AndCorruptFiles) {
  const TempDir dir("tensor32");
  const RowMatrix m = testing::UniformGrid(1, 5, 7);
  SaveMatrix(dir.path() / "m.avt", m, DType::kF32);
  const RowMatrix back = LoadMatrix(dir.path() / "m.avt");
  EXPECT_LT((back - m).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_EQ(ReadFileBytes(dir.path() / "m.avt").size(), 4 + 4 + 4 + 8 + 35 * 4u);
  std::string bytes = ReadFileBytes(dir.path() / "m.avt");
  WriteFileAtomic(dir.path() / "short.avt", bytes.substr(0, bytes.size() - 1));
  EXPECT_ANY_THROW(LoadTensor(dir.path() / "short.avt"));
  WriteFileAtomic(dir.path() / "long.avt", bytes + "x");
  EXPECT_ANY_THROW(LoadTensor(dir.path() / "long.avt"));
  bytes[0] = 'X';
  WriteFileAtomic(dir.path() / "magic.avt", bytes);
  EXPECT_ANY_THROW(LoadTensor(dir.path() / "magic.avt"));
  EXPECT_EQ(ParseDType(DTypeName(DType::kF64)), DType::kF64);
}

// --- manifest ---

Manifest TwoSpeakerManifest() {
  Manifest m;
  m.entries.push_back({"a", "a.wav", "a.csv", "bin blue", "s1", "train"});
  m.entries.push_back({"b", "b.wav", "b.csv", "bin blue", "s2", "test"});
  return m;
}

TEST(Manifest, ValidationRules) {
  Manifest m = TwoSpeakerManifest();
  EXPECT_NO_THROW(m.Validate(false));
  EXPECT_ANY_THROW(m.Validate(true));  // files do not exist
  Manifest dup = m;
  dup.entries[1].utterance_id = "a";
  EXPECT_ANY_THROW(dup.Validate(false));
  Manifest leak = m;
  leak.entries[1].speaker_id = "s1";
  EXPECT_ANY_THROW(leak.Validate(false));
  Manifest split = m;
  split.entries[1].split = "dev";
  EXPECT_ANY_THROW(split.Validate(false));
  EXPECT_EQ(m.Split("train").size(), 1u);
  EXPECT_EQ(m.Find("b")->speaker_id, "s2");
  EXPECT_EQ(m.Find("zzz"), nullptr);
}

TEST(Manifest, JsonAndRelativePaths) {
  const TempDir dir("manifest");
  Manifest m = TwoSpeakerManifest();
  for (auto& e : m.entries) {
    std::ofstream(dir.path() / e.wav_path) << "x";
    std::ofstream(dir.path() / e.landmarks_path) << "x";
  }
  m.Save(dir.path() / "manifest.json");
  const Manifest back = Manifest::Load(dir.path() / "manifest.json");
  EXPECT_EQ(fs::path(back.entries[0].wav_path), dir.path() / "a.wav");
  auto j = m.ToJson();
  j["entries"][0]["gender"] = "f";
  EXPECT_ANY_THROW(Manifest::FromJson(j));
}

// --- config ---

TEST(RunConfig, RoundTripUnknownKeysAndDigest) {
  const TempDir dir("config");
  RunConfig c = SmallRun(dir.path());
  const auto j = c.ToJson();
  const RunConfig back = RunConfig::FromJson(j);
  EXPECT_EQ(back.ToJson(), j);
  EXPECT_EQ(back.Digest(), c.Digest());
  EXPECT_EQ(c.Digest().size(), 16u);
  RunConfig other = c;
  other.seed = 6;
  EXPECT_NE(other.Digest(), c.Digest());
  for (const char* section : {"", "model", "train", "mask", "dsp", "paths", "labels", "visual"}) {
    auto bad = j;
    if (*section) {
      bad[section]["bogus"] = 1;
    } else {
      bad["bogus"] = 1;
    }
    EXPECT_ANY_THROW(RunConfig::FromJson(bad)) << section;
  }
  auto rel = nlohmann::json::object();
  rel["paths"] = {{"manifest", "data/m.json"}};
  const RunConfig resolved = RunConfig::FromJson(rel, dir.path());
  EXPECT_EQ(fs::path(resolved.paths.manifest), dir.path() / "data/m.json");
  EXPECT_EQ(HexDigest(""), "cbf29ce484222325");
}

TEST(Workers, ParallelForCoversAllAndRethrows) {
  std::vector<int> hit(100, 0);
  ParallelFor(100, 4, [&](int i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(ParallelFor(10, 3, [](int i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

// --- synthetic data ---

TEST(Synth, SameSeedByteIdentical) {
  const TempDir a("synth_a"), b("synth_b");
  WriteSynthDataset(SmallSynth(), a.path());
  WriteSynthDataset(SmallSynth(), b.path());
  EXPECT_EQ(TreeBytes(a.path()), TreeBytes(b.path()));
  const TempDir c("synth_c");
  WriteSynthDataset(SmallSynth(4), c.path());
  EXPECT_NE(TreeBytes(a.path()), TreeBytes(c.path()));
}

TEST(Synth, ManifestShapeAndSpeakerDisjoint) {
  const TempDir dir("synth_m");
  const auto summary = WriteSynthDataset(SmallSynth(), dir.path());
  const Manifest m = Manifest::Load(summary.manifest_path);
  EXPECT_NO_THROW(m.Validate(true));
  EXPECT_EQ(m.Split("train").size(), 6u);
  EXPECT_EQ(m.Split("val").size(), 2u);
  EXPECT_EQ(m.Split("test").size(), 3u);
  const auto w = dsp::ReadWav(m.entries[0].wav_path);
  EXPECT_EQ(w.sample_rate, 25000);
  EXPECT_EQ(w.samples.size(), 75000u);
  EXPECT_EQ(visual::ReadLandmarkCsv(m.entries[0].landmarks_path).Frames(), 75);
  const auto lex = losses::Lexicon::Load(summary.lexicon_path);
  const losses::Tokenizer tok(losses::LabelMode::kPhones, lex);
  for (const auto& e : m.entries) EXPECT_FALSE(tok.Encode(e.transcript).empty());
}

// Unit direction of the lip shape change at the middle of a syllable,
// relative to the first (resting) frame: (height change, width change).
std::array<double, 2> LipDirection(const visual::LandmarkSequence& l, const SyllableSpan& s) {
  const int f = static_cast<int>(std::lround(0.5 * (s.start_s + s.end_s) * l.fps));
  auto height = [&](int frame) { return l.coords(frame, 2 * 51 + 1) - l.coords(frame, 2 * 57 + 1); };
  auto width = [&](int frame) { return l.coords(frame, 2 * 54) - l.coords(frame, 2 * 48); };
  const double dh = height(f) - height(0), dw = width(f) - width(0);
  const double n = std::hypot(dh, dw);
  return {dh / n, dw / n};
}

TEST(Synth, SyllablesRecoverableFromLandmarksAlone) {
  SynthConfig config = SmallSynth();
  const auto& inventory = SyllableInventory();
  const int k = static_cast<int>(inventory.size());
  std::vector<std::array<double, 2>> templates(k, {0.0, 0.0});
  std::vector<int> counts(k, 0);
  for (int i = 0; i < 40; ++i) {
    const auto u = GenerateUtterance(config, "train_" + std::to_string(i), "train_spk" + std::to_string(i % 8), "train");
    for (const auto& s : u.spans) {
      const auto d = LipDirection(u.landmarks, s);
      templates[s.syllable][0] += d[0];
      templates[s.syllable][1] += d[1];
      ++counts[s.syllable];
    }
  }
  for (int j = 0; j < k; ++j) ASSERT_GT(counts[j], 0);
  int correct = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    const auto u = GenerateUtterance(config, "test_" + std::to_string(i), "test_spk" + std::to_string(i % 2), "test");
    for (const auto& s : u.spans) {
      const auto d = LipDirection(u.landmarks, s);
      int best = -1;
      double best_dist = 1e300;
      for (int j = 0; j < k; ++j) {
        const double dist = std::hypot(d[0] - templates[j][0] / counts[j], d[1] - templates[j][1] / counts[j]);
        if (dist < best_dist) {
          best_dist = dist;
          best = j;
        }
      }
      correct += best == s.syllable;
      ++total;
    }
  }
  EXPECT_EQ(correct, total);
  EXPECT_GT(total, 100);
}

TEST(Synth, NeighbouringSyllablesCarryNoInformation) {
  // The best audio-context predictor knows the neighbours' identities
  // exactly; with independent draws it still sits at chance.
  SynthConfig config = SmallSynth();
  const int k = static_cast<int>(SyllableInventory().size());
  std::vector<std::vector<int>> table(k, std::vector<int>(k, 0));
  for (int i = 0; i < 300; ++i) {
    const auto u = GenerateUtterance(config, "train_" + std::to_string(i), "train_spk0", "train");
    for (std::size_t j = 1; j < u.spans.size(); ++j) ++table[u.spans[j - 1].syllable][u.spans[j].syllable];
  }
  int correct = 0, total = 0;
  for (int i = 0; i < 200; ++i) {
    const auto u = GenerateUtterance(config, "test_" + std::to_string(i), "test_spk0", "test");
    for (std::size_t j = 1; j < u.spans.size(); ++j) {
      const auto& row = table[u.spans[j - 1].syllable];
      const int guess = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += guess == u.spans[j].syllable;
      ++total;
    }
  }
  const double accuracy = static_cast<double>(correct) / total;
  EXPECT_LT(accuracy, 1.0 / k + 0.06) << accuracy;
}

// --- commands ---

class PipelineFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::make_unique<TempDir>("pipeline");
    CmdSynth(SmallSynth(), dir_->path() / "data");
    config_ = SmallRun(dir_->path());
  }
  fs::path Root() const { return dir_->path(); }

  std::unique_ptr<TempDir> dir_;
  RunConfig config_;
};

TEST_F(PipelineFixture, PrepareShapesAndIdempotence) {
  const auto first = CmdPrepare(config_);
  EXPECT_EQ(first.computed, 11);
  EXPECT_EQ(first.skipped, 0);
  const FeatureCache cache(config_.paths.cache);
  EXPECT_EQ(LoadTensor(cache.MelPath("train_0000")).shape, (std::vector<std::uint32_t>{149, 64}));
  EXPECT_EQ(LoadTensor(cache.MotionPath("train_0000")).shape, (std::vector<std::uint32_t>{149, 40}));
  const auto motion = cache.LoadMotion("test_0000");
  EXPECT_GE(motion.minCoeff(), 0.0);
  EXPECT_LE(motion.maxCoeff(), 1.0);
  const auto stamp = fs::last_write_time(cache.MelPath("train_0000"));
  const auto second = CmdPrepare(config_);
  EXPECT_EQ(second.computed, 0);
  EXPECT_EQ(second.skipped, 11);
  EXPECT_EQ(fs::last_write_time(cache.MelPath("train_0000")), stamp);
  EXPECT_TRUE(fs::exists(fs::path(config_.paths.cache) / "resolved_config.json"));
}

TEST_F(PipelineFixture, PrepareHandlesDroppedVideoFrame) {
  const Manifest m = Manifest::Load(config_.paths.manifest);
  const auto* e = m.Find("test_0001");
  auto seq = visual::ReadLandmarkCsv(e->landmarks_path);
  visual::LandmarkSequence cut = seq;
  cut.coords = seq.coords.topRows(74);
  visual::WriteLandmarkCsv(e->landmarks_path, cut);
  CmdPrepare(config_);
  const FeatureCache cache(config_.paths.cache);
  EXPECT_EQ(cache.LoadRawMotion("test_0001").rows(), 149);
  // Far larger mismatches are rejected.
  cut.coords = seq.coords.topRows(60);
  visual::WriteLandmarkCsv(e->landmarks_path, cut);
  EXPECT_ANY_THROW(CmdPrepare(config_));
}

TEST_F(PipelineFixture, MasksDeterministicAndAudited) {
  CmdPrepare(config_);
  const auto summary = CmdMask(config_);
  EXPECT_EQ(summary.written, 11);
  const FeatureCache cache(config_.paths.cache);
  const auto first = TreeBytes(cache.MaskDir());
  CmdMask(config_);
  EXPECT_EQ(TreeBytes(cache.MaskDir()), first);
  int mask_files = 0;
  for (const auto& [name, bytes] : first) mask_files += name.ends_with(".mask.json");
  EXPECT_EQ(mask_files, 11);
  const auto stats = CmdMaskStats(config_);
  EXPECT_EQ(stats.masks, 11);
  EXPECT_EQ(stats.violations, 0);
  const auto masked = cache.LoadMasked("test_0000");
  const auto mel = cache.LoadMel("test_0000");
  for (int t = 0; t < 149; ++t) {
    if (masked.mask.IsIntact(t)) {
      EXPECT_EQ(masked.values.row(t), mel.values.row(t));
    } else {
      EXPECT_EQ(masked.values.row(t).cwiseAbs().maxCoeff(), 0.0);
    }
  }
  RunConfig reseeded = config_;
  reseeded.seed = 77;
  CmdMask(reseeded);
  EXPECT_NE(TreeBytes(cache.MaskDir()), first);
}

TEST_F(PipelineFixture, TrainResumeInpaintEvaluate) {
  config_.model.variant = models::Variant::kMultiTaskSeq2Seq;
  CmdPrepare(config_);
  CmdMask(config_);
  const auto t1 = CmdTrain(config_);
  EXPECT_TRUE(fs::exists(t1.best_checkpoint));
  EXPECT_TRUE(fs::exists(fs::path(config_.paths.run) / "resolved_config.json"));
  std::ifstream log(t1.log);
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("train_mse"));
    EXPECT_TRUE(j.contains("train_ctc"));
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  config_.train.max_epochs = 3;
  const auto t2 = CmdTrain(config_, true);
  ASSERT_EQ(t2.fit.log.size(), 3u);
  EXPECT_EQ(t2.fit.log.back().epoch, 3);

  // One utterance gets an all-intact mask: it must pass through exactly.
  const FeatureCache cache(config_.paths.cache);
  const auto mel = cache.LoadMel("test_0002");
  SaveJsonFile(cache.MaskPath("test_0002"), corruption::Mask::AllIntact(149).ToJson());
  SaveMatrix(cache.MaskedPath("test_0002"), mel.values, DType::kF64);

  InpaintOptions opts;
  opts.png = true;
  const auto inp = CmdInpaint(config_, opts);
  EXPECT_EQ(inp.ids.size(), 3u);
  const fs::path out(config_.paths.output);
  EXPECT_EQ(LoadMatrix(out / "test_0002.mel.avt"), mel.values);
  const auto wav = dsp::ReadWav(out / "test_0000.wav");
  EXPECT_EQ(wav.sample_rate, 8000);
  EXPECT_LE(std::abs(static_cast<long>(wav.samples.size()) - 24000), 160);
  const auto png = ReadPng(out / "test_0000.png");
  EXPECT_EQ(png.width, 3 * 149 + 2 * 3);

  const auto report = CmdEvaluate(config_);
  ASSERT_EQ(report.per_sample.size(), 3u);
  const auto j = LoadJsonFile(out / "report.json");
  double stoi = 0, psnr = 0, mse = 0;
  for (const auto& s : j.at("per_sample")) {
    stoi += s.at("stoi").get<double>();
    mse += s.at("mse").get<double>();
    psnr += s.at("psnr_db").is_string() ? metrics::kPsnrCapDb : std::min(metrics::kPsnrCapDb, s.at("psnr_db").get<double>());
    if (!s.at("psnr_db").is_string())
      EXPECT_EQ(s.at("psnr_db").get<double>(), -10.0 * std::log10(s.at("mse").get<double>()));
  }
  EXPECT_NEAR(j.at("means").at("stoi").get<double>(), stoi / 3, 1e-12);
  EXPECT_NEAR(j.at("means").at("mse").get<double>(), mse / 3, 1e-12);
  EXPECT_NEAR(j.at("means").at("psnr_db").get<double>(), psnr / 3, 1e-12);
  EXPECT_FALSE(j.at("means").contains("pesq"));
  EXPECT_TRUE(fs::exists(out / "report.csv"));
}

TEST_F(PipelineFixture, GroundTruthEvaluatesPerfectly) {
  CmdPrepare(config_);
  CmdMask(config_);
  InpaintOptions opts;
  opts.mode = InpaintMode::kGroundTruth;
  CmdInpaint(config_, opts);
  const auto report = CmdEvaluate(config_);
  EXPECT_EQ(report.mean_mse, 0.0);
  EXPECT_DOUBLE_EQ(report.mean_psnr_db, metrics::kPsnrCapDb);
  EXPECT_NEAR(report.mean_stoi, 1.0, 1e-6);
  opts.mode = InpaintMode::kMaskedInput;
  CmdInpaint(config_, opts);
  const auto degraded = CmdEvaluate(config_);
  EXPECT_GT(degraded.mean_mse, 0.0);
  EXPECT_LT(degraded.mean_psnr_db, metrics::kPsnrCapDb);
}

TEST_F(PipelineFixture, SchemaErrorsBeforeCompute) {
  RunConfig bad = config_;
  bad.train.batch = 0;
  EXPECT_ANY_THROW(CmdTrain(bad));
  EXPECT_FALSE(fs::exists(config_.paths.run));
  RunConfig wrong_modality = config_;
  CmdPrepare(config_);
  CmdMask(config_);
  CmdTrain(config_);
  wrong_modality.model.variant = models::Variant::kAudioOnly;
  InpaintOptions opts;
  // The checkpoint records its own variant, so the run config's variant
  // cannot silently override it.
  EXPECT_NO_THROW(CmdInpaint(wrong_modality, opts));
}

TEST(Triptych, PanelOrderAndMaskStrip) {
  const int t = 20;
  const RowMatrix input = RowMatrix::Constant(t, 64, 0.0);
  const RowMatrix restored = RowMatrix::Constant(t, 64, 0.5);
  const RowMatrix truth = RowMatrix::Constant(t, 64, 1.0);
  const auto mask = corruption::Mask::FromGaps(t, {{5, 4}});
  const GrayImage img = RenderTriptych(input, restored, truth, mask);
  ASSERT_EQ(img.width, 3 * t + 6);
  const int y = img.height - 1;
  EXPECT_EQ(img.At(t / 2, y), 0);
  EXPECT_NEAR(img.At(t + 3 + t / 2, y), 128, 1);
  EXPECT_EQ(img.At(2 * (t + 3) + t / 2, y), 255);
  // Strip is darker over masked frames than over intact ones.
  EXPECT_LT(img.At(6, 0), img.At(12, 0));
  const TempDir dir("png");
  WritePng(dir.path() / "t.png", img);
  const GrayImage back = ReadPng(dir.path() / "t.png");
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(GradCheckCommand, AllVariantsPass) {
  for (auto v : {models::Variant::kAudioOnly, models::Variant::kSeq2Seq,
                 models::Variant::kMultiTaskSeq2Seq, models::Variant::kSingleStack}) {
    EXPECT_LT(CmdGradCheck(v, 1).max_rel_error, 1e-4) << models::VariantName(v);
  }
}

TEST(MaskStatsCommand, FreshDrawsMatchSpec) {
  const auto stats = CmdMaskStats(corruption::MaskSpec{}, 2000, 149, 1);
  EXPECT_EQ(stats.masks, 2000);
  EXPECT_EQ(stats.violations, 0);
  EXPECT_GE(stats.min_total, 15);
  EXPECT_LE(stats.max_total, 75);
  EXPECT_GE(stats.min_gap, 2);
  EXPECT_NEAR(stats.mean_total, 45.0, 2.0);
}

}  // namespace
}  // namespace avi::pipeline
