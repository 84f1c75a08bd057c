// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "avinpaint/dsp/mel.h"
#include "avinpaint/dsp/stft.h"
#include "avinpaint/dsp/waveform.h"

namespace avi::dsp {

struct DspConfig {
  int sample_rate = 8000;
  double preemphasis = 0.97;
  StftParams stft;
  int n_mels = 64;
  double db_floor = -80.0;
  int griffin_lim_iters = 300;

  void Validate() const;
};

// Resample -> pre-emphasis -> STFT -> normalized log-mel.
MelSpectrogram Analyze(const Waveform& raw, const DspConfig& config);

// The rate-converted waveform that Analyze would see, before pre-emphasis.
Waveform Condition(const Waveform& raw, const DspConfig& config);

// Mel inversion -> Griffin-Lim -> de-emphasis.
Waveform Synthesize(const MelSpectrogram& mel, const DspConfig& config);

}  // namespace avi::dsp
