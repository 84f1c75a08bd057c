// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/dsp/analysis.h"

#include <stdexcept>

#include "avinpaint/dsp/filters.h"

namespace avi::dsp {

void DspConfig::Validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (!(preemphasis >= 0.0 && preemphasis < 1.0))
    throw std::invalid_argument("preemphasis must lie in [0, 1)");
  stft.Validate();
  if (n_mels < 1 || n_mels > stft.Bins())
    throw std::invalid_argument("n_mels must be in [1, fft_len/2+1]");
  if (!(db_floor < 0.0)) throw std::invalid_argument("db_floor must be negative");
  if (griffin_lim_iters < 1)
    throw std::invalid_argument("griffin_lim_iters must be >= 1");
}

Waveform Condition(const Waveform& raw, const DspConfig& config) {
  Validate(raw);
  return Resample(raw, config.sample_rate);
}

MelSpectrogram Analyze(const Waveform& raw, const DspConfig& config) {
  config.Validate();
  const Waveform emphasized = Preemphasize(Condition(raw, config), config.preemphasis);
  const MelFilterbank fb = MelMatrix(config.n_mels, config.stft.fft_len, config.sample_rate);
  return ToMel(Stft(emphasized.samples, config.stft), fb, config.db_floor);
}

Waveform Synthesize(const MelSpectrogram& mel, const DspConfig& config) {
  config.Validate();
  const MelFilterbank fb = MelMatrix(config.n_mels, config.stft.fft_len, config.sample_rate);
  const ComplexSpectrogram magnitude = InvertMel(mel, fb, config.stft);
  Waveform emphasized{GriffinLim(magnitude.frames.real(), config.griffin_lim_iters,
                                 config.stft),
                      config.sample_rate};
  return Deemphasize(emphasized, config.preemphasis);
}

}  // namespace avi::dsp
