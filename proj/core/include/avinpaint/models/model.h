// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"
#include "avinpaint/corruption/mask.h"
#include "avinpaint/nn/layers.h"

namespace avi::models {

// A-SI: audio only. AV-S2S: visual encoder feeding a decoder that also reads
// the masked spectrogram. AV-MTL-S2S: AV-S2S plus a CTC head on the encoder.
// AV-SI: visual and audio features concatenated into a single BLSTM stack.
enum class Variant { kAudioOnly, kSeq2Seq, kMultiTaskSeq2Seq, kSingleStack };

Variant ParseVariant(std::string_view name);
std::string_view VariantName(Variant v);

struct ModelConfig {
  Variant variant = Variant::kMultiTaskSeq2Seq;
  int hidden = 256;
  int encoder_layers = 3;
  int decoder_layers = 3;  // the single stack of A-SI and AV-SI
  int fc_dim = 64;         // encoder output width
  int spec_dim = 64;
  int visual_dim = 40;
  int vocab = 39;          // CTC labels, blank excluded
  double lambda = 0.001;

  bool UsesVisual() const { return variant != Variant::kAudioOnly; }
  bool HasEncoder() const {
    return variant == Variant::kSeq2Seq || variant == Variant::kMultiTaskSeq2Seq;
  }
  bool HasCtcHead() const { return variant == Variant::kMultiTaskSeq2Seq; }

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Number of trainable scalars the configuration builds.
long ParameterCount(const ModelConfig& config);

template <typename S>
class Model {
 public:
  struct Outputs {
    nn::Var y;        // spec_dim wide, relu
    nn::Var context;  // encoder output, invalid without an encoder
    nn::Var logits;   // vocab + 1 wide, invalid without a CTC head
  };

  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& Config() const { return config_; }
  // Stable order: the order layers are applied, kernel before bias.
  std::vector<nn::Parameter<S>*> Parameters();
  long Size();

  // spec is time-major (steps, batch) with spec_dim columns; visual has the
  // same layout and visual_dim columns, and must be invalid for A-SI.
  Outputs Forward(nn::Tape<S>& tape, nn::Var spec, nn::Var visual);

 private:
  ModelConfig config_;
  std::vector<nn::BlstmLayer<S>> encoder_;
  nn::DenseLayer<S> encoder_fc_;
  nn::DenseLayer<S> ctc_head_;
  std::vector<nn::BlstmLayer<S>> decoder_;
  nn::DenseLayer<S> output_fc_;
};

extern template class Model<float>;
extern template class Model<double>;

struct InpaintResult {
  RowMatrix y;               // raw decoder output
  RowMatrix o;               // composited spectrogram
  RowMatrix encoder_context; // empty without an encoder
  RowMatrix phoneme_logits;  // empty without a CTC head
};

// Single-utterance forward pass followed by compositing. `visual` must be
// null for A-SI and present otherwise.
template <typename S>
InpaintResult Inpaint(Model<S>& model, const corruption::MaskedSpectrogram& a,
                      const RowMatrix* visual);

}  // namespace avi::models
