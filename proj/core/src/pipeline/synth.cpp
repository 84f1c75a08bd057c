// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "avinpaint/common/random.h"
#include "avinpaint/common/tensor_file.h"
#include "avinpaint/losses/lexicon.h"
#include "avinpaint/pipeline/workers.h"

namespace avi::pipeline {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLipTravelPx = 7.0;
constexpr double kLandmarkNoisePx = 0.1;

double Angle(int k) { return -kPi / 2 + kPi * (k + 0.5) / 8.0; }

struct SpeakerTraits {
  double pitch_scale;
  double face_scale;
  double cx;
  double cy;
};

SpeakerTraits Traits(const SynthConfig& config, const std::string& speaker) {
  Rng rng(DeriveSeed(config.seed, "speaker:" + speaker));
  return {rng.Uniform(0.92, 1.08), rng.Uniform(0.9, 1.1), rng.Uniform(140.0, 180.0),
          rng.Uniform(140.0, 180.0)};
}

// Raised-cosine activation of a syllable, 0 outside its span.
double Activation(double t, const SyllableSpan& s) {
  if (t <= s.start_s || t >= s.end_s) return 0.0;
  return 0.5 - 0.5 * std::cos(2.0 * kPi * (t - s.start_s) / (s.end_s - s.start_s));
}

}  // namespace

const std::vector<Syllable>& SyllableInventory() {
  static const std::vector<Syllable> kInventory = {
      {"ba", {"B", "AA"}, 115.0, 750.0, 1150.0, Angle(0)},
      {"de", {"D", "EH"}, 140.0, 520.0, 1850.0, Angle(1)},
      {"gi", {"G", "IY"}, 170.0, 290.0, 2400.0, Angle(2)},
      {"ko", {"K", "OW"}, 200.0, 460.0, 880.0, Angle(3)},
      {"mu", {"M", "UW"}, 235.0, 310.0, 1500.0, Angle(4)},
      {"na", {"N", "AE"}, 125.0, 640.0, 2900.0, Angle(5)},
      {"pe", {"P", "EY"}, 185.0, 380.0, 3300.0, Angle(6)},
      {"ti", {"T", "IH"}, 260.0, 1000.0, 2100.0, Angle(7)},
  };
  return kInventory;
}

void SynthConfig::Validate() const {
  if (n_train < 1 || n_test < 1 || ValCount() < 1)
    throw std::invalid_argument("synth needs at least one utterance per split");
  if (source_rate < 8000) throw std::invalid_argument("source_rate must be at least 8000");
  if (!(seconds >= 1.0)) throw std::invalid_argument("synth clips must last at least 1 s");
  if (!(fps > 0)) throw std::invalid_argument("fps must be positive");
  if (train_speakers < 1 || val_speakers < 1 || test_speakers < 1)
    throw std::invalid_argument("each split needs a speaker");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

RowMatrix RestFace(const SynthConfig& config, const std::string& speaker) {
  const SpeakerTraits tr = Traits(config, speaker);
  RowMatrix face(1, 2 * visual::kFaceLandmarks);
  auto set = [&](int i, double x, double y) {
    face(0, 2 * i) = tr.cx + tr.face_scale * x;
    face(0, 2 * i + 1) = tr.cy + tr.face_scale * y;
  };
  for (int i = 0; i < 17; ++i) {  // jaw
    const double a = kPi * (i / 16.0);
    set(i, -70.0 * std::cos(a), 10.0 + 75.0 * std::sin(a));
  }
  for (int i = 0; i < 10; ++i) set(17 + i, -50.0 + 11.0 * i + (i >= 5 ? 6.0 : 0.0), -45.0 - 6.0 * std::sin(kPi * (i % 5) / 4.0));
  for (int i = 0; i < 9; ++i) set(27 + i, i < 4 ? 0.0 : -12.0 + 6.0 * (i - 4), i < 4 ? -35.0 + 9.0 * i : 5.0);
  for (int eye = 0; eye < 2; ++eye)
    for (int i = 0; i < 6; ++i) {
      const double a = 2.0 * kPi * i / 6.0;
      set(36 + 6 * eye + i, (eye ? 30.0 : -30.0) + 12.0 * std::cos(a), -25.0 + 5.0 * std::sin(a));
    }
  for (int i = 0; i < 12; ++i) {  // outer lip
    const double a = 2.0 * kPi * i / 12.0;
    set(48 + i, -25.0 * std::cos(a), 40.0 + 9.0 * std::sin(a));
  }
  for (int i = 0; i < 8; ++i) {  // inner lip
    const double a = 2.0 * kPi * i / 8.0;
    set(60 + i, -18.0 * std::cos(a), 40.0 + 3.0 * std::sin(a));
  }
  return face;
}

SynthUtterance GenerateUtterance(const SynthConfig& config, const std::string& id,
                                 const std::string& speaker, const std::string& split) {
  const auto& inventory = SyllableInventory();
  const SpeakerTraits tr = Traits(config, speaker);
  Rng rng(DeriveSeed(config.seed, "utterance:" + id));
  SynthUtterance u;
  u.id = id;
  u.speaker = speaker;
  u.split = split;

  double t = rng.Uniform(0.05, 0.15);
  while (true) {
    const double dur = rng.Uniform(0.16, 0.28);
    if (t + dur > config.seconds - 0.05) break;
    const int k = static_cast<int>(rng.UniformInt(0, static_cast<std::int64_t>(inventory.size()) - 1));
    u.spans.push_back({k, t, t + dur});
    t += dur + rng.Uniform(0.03, 0.10);
  }
  for (const auto& s : u.spans) {
    if (!u.transcript.empty()) u.transcript += ' ';
    u.transcript += inventory[static_cast<std::size_t>(s.syllable)].name;
  }

  // Audio: harmonic series shaped by two Gaussian resonances.
  const int rate = config.source_rate;
  const auto n = static_cast<std::size_t>(std::lround(config.seconds * rate));
  u.audio.sample_rate = rate;
  u.audio.samples.assign(n, 0.0);
  const double nyquist_guard = 3800.0;
  for (const auto& s : u.spans) {
    const Syllable& syl = inventory[static_cast<std::size_t>(s.syllable)];
    const double f0 = syl.f0_hz * tr.pitch_scale;
    std::vector<double> gains, freqs, phases;
    for (int h = 1; h * f0 < nyquist_guard; ++h) {
      const double f = h * f0;
      const double g = std::exp(-0.5 * std::pow((f - syl.formant1_hz) / 140.0, 2)) +
                       0.7 * std::exp(-0.5 * std::pow((f - syl.formant2_hz) / 180.0, 2)) + 0.03;
      gains.push_back(g);
      freqs.push_back(f);
      phases.push_back(rng.Uniform(0.0, 2.0 * kPi));
    }
    const auto first = static_cast<std::size_t>(std::ceil(s.start_s * rate));
    const auto last = std::min(n, static_cast<std::size_t>(std::floor(s.end_s * rate)) + 1);
    for (std::size_t i = first; i < last; ++i) {
      const double time = static_cast<double>(i) / rate;
      const double env = std::sqrt(Activation(time, s));
      double v = 0.0;
      for (std::size_t h = 0; h < freqs.size(); ++h) v += gains[h] * std::sin(2.0 * kPi * freqs[h] * time + phases[h]);
      u.audio.samples[i] += env * v;
    }
  }
  double peak = 0.0;
  for (double v : u.audio.samples) peak = std::max(peak, std::abs(v));
  for (double& v : u.audio.samples) v = (peak > 0 ? 0.5 * v / peak : 0.0) + 1e-4 * rng.Normal();

  // Landmarks: rest face plus lip displacement along the syllable direction.
  const RowMatrix rest = RestFace(config, speaker);
  const int frames = static_cast<int>(std::lround(config.seconds * config.fps));
  u.landmarks.fps = config.fps;
  u.landmarks.points = visual::kFaceLandmarks;
  u.landmarks.coords.resize(frames, 2 * visual::kFaceLandmarks);
  for (int f = 0; f < frames; ++f) {
    const double time = f / config.fps;
    double dh = 0.0, dv = 0.0;
    for (const auto& s : u.spans) {
      const double a = Activation(time, s);
      if (a == 0.0) continue;
      const double angle = inventory[static_cast<std::size_t>(s.syllable)].lip_angle;
      dv += kLipTravelPx * tr.face_scale * a * std::cos(angle);
      dh += kLipTravelPx * tr.face_scale * a * std::sin(angle);
    }
    u.landmarks.coords.row(f) = rest.row(0);
    for (int p = visual::kMouthFirst; p < visual::kFaceLandmarks; ++p) {
      const bool outer = p < 60;
      const int i = outer ? p - 48 : p - 60;
      const double a = 2.0 * kPi * i / (outer ? 12.0 : 8.0);
      const double scale = outer ? 1.0 : 0.8;
      u.landmarks.coords(f, 2 * p) += -scale * dh * std::cos(a);
      u.landmarks.coords(f, 2 * p + 1) += scale * dv * std::sin(a);
    }
    for (Eigen::Index c = 0; c < u.landmarks.coords.cols(); ++c)
      u.landmarks.coords(f, c) += kLandmarkNoisePx * rng.Normal();
  }
  return u;
}

SynthSummary WriteSynthDataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.Validate();
  struct Plan {
    std::string id, speaker, split;
  };
  std::vector<Plan> plan;
  auto add_split = [&](const std::string& split, int count, int speakers) {
    for (int i = 0; i < count; ++i) {
      const std::string speaker = split + "_spk" + std::to_string(i % speakers);
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04d", split.c_str(), i);
      plan.push_back({id, speaker, split});
    }
  };
  add_split("train", config.n_train, config.train_speakers);
  add_split("val", config.ValCount(), config.val_speakers);
  add_split("test", config.n_test, config.test_speakers);

  std::filesystem::create_directories(out_dir / "audio");
  std::filesystem::create_directories(out_dir / "landmarks");
  std::vector<nlohmann::json> truth(plan.size());
  std::vector<ManifestEntry> entries(plan.size());
  ParallelFor(static_cast<int>(plan.size()), config.workers, [&](int i) {
    const Plan& p = plan[static_cast<std::size_t>(i)];
    const SynthUtterance u = GenerateUtterance(config, p.id, p.speaker, p.split);
    dsp::WriteWav(out_dir / "audio" / (p.id + ".wav"), u.audio);
    visual::WriteLandmarkCsv(out_dir / "landmarks" / (p.id + ".csv"), u.landmarks);
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : u.spans) spans.push_back({{"syllable", s.syllable}, {"start_s", s.start_s}, {"end_s", s.end_s}});
    truth[static_cast<std::size_t>(i)] = {{"utterance_id", p.id}, {"speaker_id", p.speaker}, {"spans", spans}};
    entries[static_cast<std::size_t>(i)] = {p.id, "audio/" + p.id + ".wav", "landmarks/" + p.id + ".csv",
                                            u.transcript, p.speaker, p.split};
  });

  SynthSummary summary;
  summary.manifest.entries = entries;
  summary.manifest_path = out_dir / "manifest.json";
  summary.manifest.Save(summary.manifest_path);
  losses::Lexicon lex;
  nlohmann::json inventory = nlohmann::json::array();
  for (const auto& s : SyllableInventory()) {
    lex.Add(s.name, s.phones);
    inventory.push_back({{"name", s.name}, {"phones", s.phones}, {"f0_hz", s.f0_hz},
                         {"formant1_hz", s.formant1_hz}, {"formant2_hz", s.formant2_hz},
                         {"lip_angle", s.lip_angle}});
  }
  summary.lexicon_path = out_dir / "lexicon.json";
  WriteFileAtomic(summary.lexicon_path, lex.ToJson().dump(1) + "\n");
  nlohmann::json truth_doc = {{"seed", config.seed}, {"seconds", config.seconds}, {"fps", config.fps},
                              {"inventory", inventory}, {"utterances", truth}};
  WriteFileAtomic(out_dir / "truth.json", truth_doc.dump(1) + "\n");
  // Media paths resolved against out_dir for callers.
  for (auto& e : summary.manifest.entries) {
    e.wav_path = (out_dir / e.wav_path).string();
    e.landmarks_path = (out_dir / e.landmarks_path).string();
  }
  return summary;
}

}  // namespace avi::pipeline
