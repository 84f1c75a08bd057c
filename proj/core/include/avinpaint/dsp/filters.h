// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "avinpaint/dsp/waveform.h"

namespace avi::dsp {

// Rational-ratio polyphase resampler. The anti-aliasing filter is a
// Kaiser-windowed sinc (60 dB rejection, cutoff at the lower Nyquist), the
// same design as the Octave `resample` routine. Output length is
// ceil(N * up / down).
Waveform Resample(const Waveform& w, int target_rate);

// y[0] = x[0]; y[n] = x[n] - coeff * x[n-1].
Waveform Preemphasize(const Waveform& w, double coeff = 0.97);

// y[n] = x[n] + coeff * y[n-1]; exact inverse of Preemphasize.
Waveform Deemphasize(const Waveform& w, double coeff = 0.97);

}  // namespace avi::dsp
