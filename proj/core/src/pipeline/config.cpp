// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/pipeline/config.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "avinpaint/common/random.h"

namespace avi::pipeline {

namespace {

void RejectUnknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
}

std::string Resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

std::string HexDigest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(Fnv1a64(bytes)));
  return buf;
}

nlohmann::json DspToJson(const dsp::DspConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"preemphasis", c.preemphasis}, {"win", c.stft.win},
          {"hop", c.stft.hop}, {"fft_len", c.stft.fft_len}, {"window", dsp::WindowName(c.stft.window)},
          {"n_mels", c.n_mels}, {"db_floor", c.db_floor}, {"griffin_lim_iters", c.griffin_lim_iters}};
}

dsp::DspConfig DspFromJson(const nlohmann::json& j) {
  RejectUnknown(j, {"sample_rate", "preemphasis", "win", "hop", "fft_len", "window", "n_mels",
                    "db_floor", "griffin_lim_iters"}, "dsp");
  dsp::DspConfig c;
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.preemphasis = j.value("preemphasis", c.preemphasis);
  c.stft.win = j.value("win", c.stft.win);
  c.stft.hop = j.value("hop", c.stft.hop);
  c.stft.fft_len = j.value("fft_len", c.stft.fft_len);
  if (j.contains("window")) c.stft.window = dsp::ParseWindowKind(j.at("window").get<std::string>());
  c.n_mels = j.value("n_mels", c.n_mels);
  c.db_floor = j.value("db_floor", c.db_floor);
  c.griffin_lim_iters = j.value("griffin_lim_iters", c.griffin_lim_iters);
  c.Validate();
  return c;
}

nlohmann::json VisualToJson(const visual::VisualConfig& c) {
  return {{"mouth_only", c.mouth_only}, {"interpolation", visual::InterpolationName(c.interpolation)}};
}

visual::VisualConfig VisualFromJson(const nlohmann::json& j) {
  RejectUnknown(j, {"mouth_only", "interpolation"}, "visual");
  visual::VisualConfig c;
  c.mouth_only = j.value("mouth_only", c.mouth_only);
  if (j.contains("interpolation"))
    c.interpolation = visual::ParseInterpolation(j.at("interpolation").get<std::string>());
  return c;
}

losses::Tokenizer LabelConfig::MakeTokenizer() const {
  return losses::Tokenizer(mode, lexicon.empty() ? losses::Lexicon::Grid() : losses::Lexicon::Load(lexicon));
}

void RunConfig::Validate() const {
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  dsp.Validate();
  mask.Validate();
  model.Validate();
  train.Validate();
  if (split != "train" && split != "val" && split != "test")
    throw std::invalid_argument("split must be train, val or test");
}

nlohmann::json RunConfig::ToJson() const {
  return {{"seed", seed},
          {"workers", workers},
          {"precision", DTypeName(precision)},
          {"dsp", DspToJson(dsp)},
          {"visual", VisualToJson(visual)},
          {"mask", mask.ToJson()},
          {"model", model.ToJson()},
          {"train", train.ToJson()},
          {"labels", {{"mode", losses::LabelModeName(labels.mode)}, {"lexicon", labels.lexicon}}},
          {"paths", {{"manifest", paths.manifest}, {"cache", paths.cache}, {"run", paths.run},
                     {"output", paths.output}}},
          {"split", split}};
}

RunConfig RunConfig::FromJson(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RejectUnknown(j, {"seed", "workers", "precision", "dsp", "visual", "mask", "model", "train",
                    "labels", "paths", "split"}, "run config");
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  if (j.contains("precision")) c.precision = ParseDType(j.at("precision").get<std::string>());
  if (j.contains("dsp")) c.dsp = DspFromJson(j.at("dsp"));
  if (j.contains("visual")) c.visual = VisualFromJson(j.at("visual"));
  if (j.contains("mask")) c.mask = corruption::MaskSpec::FromJson(j.at("mask"));
  if (j.contains("model")) c.model = models::ModelConfig::FromJson(j.at("model"));
  if (j.contains("train")) c.train = training::TrainConfig::FromJson(j.at("train"));
  if (j.contains("labels")) {
    const auto& l = j.at("labels");
    RejectUnknown(l, {"mode", "lexicon"}, "labels");
    if (l.contains("mode")) c.labels.mode = losses::ParseLabelMode(l.at("mode").get<std::string>());
    c.labels.lexicon = Resolve(l.value("lexicon", ""), base_dir);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    RejectUnknown(p, {"manifest", "cache", "run", "output"}, "paths");
    c.paths.manifest = Resolve(p.value("manifest", ""), base_dir);
    c.paths.cache = Resolve(p.value("cache", ""), base_dir);
    c.paths.run = Resolve(p.value("run", ""), base_dir);
    c.paths.output = Resolve(p.value("output", ""), base_dir);
  }
  c.split = j.value("split", c.split);
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

std::string RunConfig::Digest() const { return HexDigest(ToJson().dump()); }

}  // namespace avi::pipeline
