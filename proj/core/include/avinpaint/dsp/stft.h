// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avinpaint/common/matrix.h"

namespace avi::dsp {

enum class WindowKind { kHann, kHamming, kRectangular };

WindowKind ParseWindowKind(std::string_view name);
std::string_view WindowName(WindowKind kind);

// Periodic windows (the DFT-even form), which overlap-add to a constant
// at 50% hop for Hann.
std::vector<double> MakeWindow(WindowKind kind, int length);

struct StftParams {
  int win = 320;
  int hop = 160;
  int fft_len = 510;
  WindowKind window = WindowKind::kHann;

  int Bins() const { return fft_len / 2 + 1; }
  // floor((n - win) / hop) + 1, or 0 when the signal is shorter than win.
  int FrameCount(std::size_t n) const;
  std::size_t SignalLength(int frames) const {
    return frames > 0 ? static_cast<std::size_t>(frames - 1) * hop + win : 0;
  }
  void Validate() const;
};

// Real-input FFT of arbitrary length (mixed radix). Inverse is scaled by 1/n.
// Not thread safe; create one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  int size() const { return n_; }
  // in: n samples; out: n/2+1 bins.
  void Forward(std::span<const double> in, std::span<std::complex<double>> out);
  // in: n/2+1 bins (imaginary parts of DC and, for even n, Nyquist ignored);
  // out: n samples.
  void Inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

// One-sided STFT, frames x bins.
struct ComplexSpectrogram {
  ComplexRowMatrix frames;
  StftParams params;

  int Frames() const { return static_cast<int>(frames.rows()); }
  int Bins() const { return static_cast<int>(frames.cols()); }
};

// Frames start at 0 with no centering pad; each windowed frame is
// zero-padded to fft_len.
ComplexSpectrogram Stft(std::span<const double> signal, const StftParams& params);

// Weighted overlap-add with squared-window normalization: the least-squares
// signal whose STFT is closest to `spec`. Output length is
// (frames - 1) * hop + win. Samples where the window sum vanishes at the very
// edges are set to 0; a vanishing sum elsewhere throws.
std::vector<double> Istft(const ComplexSpectrogram& spec);

struct GriffinLimTrace {
  // objective[k] is the inconsistency after iteration k+1;
  // initial_objective is measured for the starting phase estimate.
  double initial_objective = 0.0;
  std::vector<double> objective;
};

// Sum over the full two-sided spectrum of (|S| - target)^2, so the value
// matches the Euclidean distance the Griffin-Lim projections decrease.
double SpectralInconsistency(const ComplexSpectrogram& spec,
                             const RowMatrix& target_magnitude);

// Alternating projections starting from `initial_phase` (radians, frames x
// bins), or zero phase when omitted. Returns the waveform of the last
// iterate.
std::vector<double> GriffinLim(const RowMatrix& magnitude, int iterations,
                               const StftParams& params,
                               GriffinLimTrace* trace = nullptr,
                               const RowMatrix* initial_phase = nullptr);

}  // namespace avi::dsp
