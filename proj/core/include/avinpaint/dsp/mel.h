// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "avinpaint/common/matrix.h"
#include "avinpaint/dsp/stft.h"

namespace avi::dsp {

inline constexpr const char* kMelScaleHtk = "htk-2595log10";

double HzToMel(double hz);
double MelToHz(double mel);

struct MelFilterbank {
  // n_mels x bins, non-negative triangles with unit peak.
  Eigen::MatrixXd weights;
  std::vector<double> center_hz;
  std::string mel_scale = kMelScaleHtk;
  double sample_rate = 8000.0;
  int fft_len = 510;

  int Mels() const { return static_cast<int>(weights.rows()); }
  int Bins() const { return static_cast<int>(weights.cols()); }
};

// Triangular filters whose edges are equally spaced on the mel axis between
// 0 Hz and rate/2. Throws if n_mels exceeds the bin count or a filter would
// cover no bin.
MelFilterbank MelMatrix(int n_mels, int fft_len, double sample_rate);

struct NormalizationParams {
  double db_floor = -80.0;
  double reference_power = 1.0;
};

// Reference powers are never taken below this value, so digital silence
// maps to the floor instead of being stretched to full scale.
inline constexpr double kMinReferencePower = 1e-6;

// Normalized log-mel grid, frames x mels, values in [0, 1].
struct MelSpectrogram {
  RowMatrix values;
  NormalizationParams norm;
  bool has_norm = true;

  int Frames() const { return static_cast<int>(values.rows()); }
  int Mels() const { return static_cast<int>(values.cols()); }
};

// power -> mel power -> dB relative to the utterance maximum, clipped to
// [db_floor, 0] -> (dB - db_floor) / -db_floor.
MelSpectrogram ToMel(const ComplexSpectrogram& spec, const MelFilterbank& fb,
                     double db_floor = -80.0);

inline constexpr int kDefaultMelRefineIterations = 500;

// Undo normalization and compression, map mel power back to linear bins with
// the Moore-Penrose pseudo-inverse and clip negatives. The clipped solution is
// then refined with `refine_iterations` multiplicative (KL) updates so its
// mel projection matches the input again; 0 keeps the plain clipped
// pseudo-inverse. Magnitudes are square roots of power, with zero phase.
ComplexSpectrogram InvertMel(const MelSpectrogram& mel, const MelFilterbank& fb,
                             const StftParams& params,
                             int refine_iterations = kDefaultMelRefineIterations);

}  // namespace avi::dsp
