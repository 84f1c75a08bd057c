// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/models/model.h"

#include <stdexcept>

#include "avinpaint/common/random.h"

namespace avi::models {

Variant ParseVariant(std::string_view name) {
  if (name == "A-SI") return Variant::kAudioOnly;
  if (name == "AV-S2S") return Variant::kSeq2Seq;
  if (name == "AV-MTL-S2S") return Variant::kMultiTaskSeq2Seq;
  if (name == "AV-SI") return Variant::kSingleStack;
  throw std::invalid_argument("unknown model variant: " + std::string(name));
}

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kAudioOnly: return "A-SI";
    case Variant::kSeq2Seq: return "AV-S2S";
    case Variant::kMultiTaskSeq2Seq: return "AV-MTL-S2S";
    case Variant::kSingleStack: return "AV-SI";
  }
  return "A-SI";
}

void ModelConfig::Validate() const {
  if (hidden < 1) throw std::invalid_argument("hidden must be positive");
  if (decoder_layers < 1) throw std::invalid_argument("decoder_layers must be positive");
  if (HasEncoder() && encoder_layers < 1) throw std::invalid_argument("encoder_layers must be positive");
  if (HasEncoder() && fc_dim < 1) throw std::invalid_argument("fc_dim must be positive");
  if (spec_dim < 1) throw std::invalid_argument("spec_dim must be positive");
  if (UsesVisual() && visual_dim < 1) throw std::invalid_argument("visual_dim must be positive");
  if (HasCtcHead() && vocab < 1) throw std::invalid_argument("vocab must be positive");
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be non-negative");
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"variant", VariantName(variant)}, {"hidden", hidden},
          {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
          {"fc_dim", fc_dim}, {"spec_dim", spec_dim}, {"visual_dim", visual_dim},
          {"vocab", vocab}, {"lambda", lambda}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model config must be an object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "variant") c.variant = ParseVariant(value.get<std::string>());
    else if (key == "hidden") c.hidden = value.get<int>();
    else if (key == "encoder_layers") c.encoder_layers = value.get<int>();
    else if (key == "decoder_layers") c.decoder_layers = value.get<int>();
    else if (key == "fc_dim") c.fc_dim = value.get<int>();
    else if (key == "spec_dim") c.spec_dim = value.get<int>();
    else if (key == "visual_dim") c.visual_dim = value.get<int>();
    else if (key == "vocab") c.vocab = value.get<int>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else throw std::invalid_argument("unknown model config key: " + key);
  }
  c.Validate();
  return c;
}

namespace {

long LstmCount(long in, long hidden) { return 4 * hidden * (in + hidden + 1); }
long BlstmStack(long in, long hidden, int layers) {
  long n = 0;
  for (int i = 0; i < layers; ++i) {
    n += 2 * LstmCount(i == 0 ? in : 2 * hidden, hidden);
  }
  return n;
}
long DenseCount(long in, long out) { return in * out + out; }

}  // namespace

long ParameterCount(const ModelConfig& c) {
  c.Validate();
  long n = 0;
  long decoder_in = c.spec_dim;
  if (c.HasEncoder()) {
    n += BlstmStack(c.visual_dim, c.hidden, c.encoder_layers) + DenseCount(2L * c.hidden, c.fc_dim);
    decoder_in += c.fc_dim;
  } else if (c.UsesVisual()) {
    decoder_in += c.visual_dim;
  }
  if (c.HasCtcHead()) n += DenseCount(2L * c.hidden, c.vocab + 1);
  n += BlstmStack(decoder_in, c.hidden, c.decoder_layers) + DenseCount(2L * c.hidden, c.spec_dim);
  return n;
}

template <typename S>
Model<S>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.Validate();
  const int h = config_.hidden;
  int decoder_in = config_.spec_dim;
  const bool s2s = config_.HasEncoder();
  if (s2s) {
    for (int i = 0; i < config_.encoder_layers; ++i)
      encoder_.emplace_back("encoder.blstm" + std::to_string(i + 1), i == 0 ? config_.visual_dim : 2 * h, h);
    encoder_fc_ = nn::DenseLayer<S>("encoder.fc", 2 * h, config_.fc_dim, nn::Activation::kRelu);
    decoder_in += config_.fc_dim;
  } else if (config_.UsesVisual()) {
    decoder_in += config_.visual_dim;
  }
  if (config_.HasCtcHead())
    ctc_head_ = nn::DenseLayer<S>("encoder.ctc", 2 * h, config_.vocab + 1, nn::Activation::kLinear);
  const std::string prefix = s2s ? "decoder." : "";
  for (int i = 0; i < config_.decoder_layers; ++i)
    decoder_.emplace_back(prefix + "blstm" + std::to_string(i + 1), i == 0 ? decoder_in : 2 * h, h);
  output_fc_ = nn::DenseLayer<S>(prefix + "fc", 2 * h, config_.spec_dim, nn::Activation::kRelu);

  Rng rng(seed);
  for (auto& l : encoder_) {
    nn::InitLstm(l.forward, rng);
    nn::InitLstm(l.backward, rng);
  }
  if (s2s) nn::InitDense(encoder_fc_, rng);
  for (auto& l : decoder_) {
    nn::InitLstm(l.forward, rng);
    nn::InitLstm(l.backward, rng);
  }
  nn::InitDense(output_fc_, rng);
  // Last, so that AV-S2S and AV-MTL-S2S built from one seed share every
  // other weight.
  if (config_.HasCtcHead()) nn::InitDense(ctc_head_, rng);
}

template <typename S>
std::vector<nn::Parameter<S>*> Model<S>::Parameters() {
  std::vector<nn::Parameter<S>*> out;
  auto add = [&](std::vector<nn::Parameter<S>*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (auto& l : encoder_) add(l.Parameters());
  if (config_.HasEncoder()) add(encoder_fc_.Parameters());
  if (config_.HasCtcHead()) add(ctc_head_.Parameters());
  for (auto& l : decoder_) add(l.Parameters());
  add(output_fc_.Parameters());
  return out;
}

template <typename S>
long Model<S>::Size() {
  long n = 0;
  for (auto* p : Parameters()) n += static_cast<long>(p->value.size());
  return n;
}

template <typename S>
typename Model<S>::Outputs Model<S>::Forward(nn::Tape<S>& tape, nn::Var spec, nn::Var visual) {
  if (tape.Value(spec).cols() != config_.spec_dim)
    throw std::invalid_argument("spectrogram width does not match the model");
  if (config_.UsesVisual() != visual.Valid())
    throw std::invalid_argument(std::string(VariantName(config_.variant)) +
                                (config_.UsesVisual() ? " requires visual features"
                                                      : " takes no visual features"));
  if (visual.Valid() && !(tape.GetLayout(visual) == tape.GetLayout(spec)))
    throw std::invalid_argument("visual and spectrogram sequences differ in length");

  Outputs out;
  nn::Var x = spec;
  if (config_.HasEncoder()) {
    nn::Var e = visual;
    for (auto& l : encoder_) e = nn::Blstm(tape, e, l);
    if (config_.HasCtcHead()) out.logits = nn::Dense(tape, e, ctc_head_);
    out.context = nn::Dense(tape, e, encoder_fc_);
    x = nn::Concat(tape, spec, out.context);
  } else if (config_.UsesVisual()) {
    x = nn::Concat(tape, visual, spec);
  }
  for (auto& l : decoder_) x = nn::Blstm(tape, x, l);
  out.y = nn::Dense(tape, x, output_fc_);
  return out;
}

template class Model<float>;
template class Model<double>;

template <typename S>
InpaintResult Inpaint(Model<S>& model, const corruption::MaskedSpectrogram& a,
                      const RowMatrix* visual) {
  if (a.values.rows() != a.mask.Frames())
    throw std::invalid_argument("mask length differs from spectrogram length");
  nn::Tape<S> tape;
  const nn::Layout layout{a.values.rows(), 1};
  const nn::Var spec = tape.Input(a.values.template cast<S>(), layout);
  nn::Var vis;
  if (visual) {
    if (visual->rows() != a.values.rows())
      throw std::invalid_argument("visual features and spectrogram differ in length");
    vis = tape.Input(visual->template cast<S>(), layout);
  }
  const auto out = model.Forward(tape, spec, vis);
  InpaintResult r;
  r.y = tape.Value(out.y).template cast<double>();
  r.o = corruption::Composite(a.values, r.y, a.mask);
  if (out.context.Valid()) r.encoder_context = tape.Value(out.context).template cast<double>();
  if (out.logits.Valid()) r.phoneme_logits = tape.Value(out.logits).template cast<double>();
  return r;
}

template InpaintResult Inpaint<float>(Model<float>&, const corruption::MaskedSpectrogram&, const RowMatrix*);
template InpaintResult Inpaint<double>(Model<double>&, const corruption::MaskedSpectrogram&, const RowMatrix*);

}  // namespace avi::models
