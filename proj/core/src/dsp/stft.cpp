// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/dsp/stft.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace avi::dsp {

WindowKind ParseWindowKind(std::string_view name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "rect" || name == "rectangular") return WindowKind::kRectangular;
  throw std::invalid_argument("unknown window: " + std::string(name));
}

std::string_view WindowName(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kRectangular: return "rect";
  }
  return "hann";
}

std::vector<double> MakeWindow(WindowKind kind, int length) {
  if (length <= 0) throw std::invalid_argument("window length must be positive");
  std::vector<double> w(static_cast<std::size_t>(length), 1.0);
  for (int n = 0; n < length; ++n) {
    const double phase = 2.0 * M_PI * n / length;
    switch (kind) {
      case WindowKind::kHann: w[n] = 0.5 - 0.5 * std::cos(phase); break;
      case WindowKind::kHamming: w[n] = 0.54 - 0.46 * std::cos(phase); break;
      case WindowKind::kRectangular: break;
    }
  }
  return w;
}

int StftParams::FrameCount(std::size_t n) const {
  if (n < static_cast<std::size_t>(win)) return 0;
  return static_cast<int>((n - win) / hop) + 1;
}

void StftParams::Validate() const {
  if (win <= 0 || hop <= 0 || fft_len <= 0)
    throw std::invalid_argument("STFT sizes must be positive");
  if (win > fft_len) throw std::invalid_argument("window longer than FFT length");
  if (hop > win) throw std::invalid_argument("hop longer than window");
}

struct RealFft::Impl {
  Eigen::FFT<double> fft;
  std::vector<double> real_buf;
  std::vector<std::complex<double>> complex_buf;
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n <= 0) throw std::invalid_argument("FFT length must be positive");
  impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  impl_->real_buf.resize(n);
  impl_->complex_buf.resize(n / 2 + 1);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  impl_->fft.fwd(impl_->complex_buf.data(), in.data(), n_);
  std::copy_n(impl_->complex_buf.begin(), n_ / 2 + 1, out.begin());
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  std::copy_n(in.begin(), n_ / 2 + 1, impl_->complex_buf.begin());
  // Hermitian projection: DC and Nyquist of a real signal are real.
  impl_->complex_buf[0].imag(0.0);
  if (n_ % 2 == 0) impl_->complex_buf[n_ / 2].imag(0.0);
  impl_->fft.inv(impl_->real_buf.data(), impl_->complex_buf.data(), n_);
  std::copy_n(impl_->real_buf.begin(), n_, out.begin());
}

ComplexSpectrogram Stft(std::span<const double> signal, const StftParams& params) {
  params.Validate();
  const int frames = params.FrameCount(signal.size());
  if (frames == 0)
    throw std::invalid_argument("signal shorter than one STFT window");
  const std::vector<double> window = MakeWindow(params.window, params.win);
  RealFft fft(params.fft_len);
  ComplexSpectrogram out;
  out.params = params;
  out.frames.resize(frames, params.Bins());
  std::vector<double> frame(params.fft_len, 0.0);
  std::vector<std::complex<double>> bins(params.Bins());
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * params.hop;
    for (int n = 0; n < params.win; ++n) frame[n] = signal[start + n] * window[n];
    fft.Forward(frame, bins);
    for (int k = 0; k < params.Bins(); ++k) out.frames(t, k) = bins[k];
  }
  return out;
}

namespace {

// Inverse transform reusing caller-owned buffers.
class OverlapAdd {
 public:
  explicit OverlapAdd(const StftParams& params)
      : params_(params),
        window_(MakeWindow(params.window, params.win)),
        fft_(params.fft_len),
        frame_(params.fft_len),
        bins_(params.Bins()) {}

  std::vector<double> Run(const ComplexRowMatrix& frames) {
    const int count = static_cast<int>(frames.rows());
    const std::size_t length = params_.SignalLength(count);
    std::vector<double> out(length, 0.0);
    if (denominator_.size() != length) BuildDenominator(count, length);
    for (int t = 0; t < count; ++t) {
      for (int k = 0; k < params_.Bins(); ++k) bins_[k] = frames(t, k);
      fft_.Inverse(bins_, frame_);
      const std::size_t start = static_cast<std::size_t>(t) * params_.hop;
      for (int n = 0; n < params_.win; ++n) out[start + n] += frame_[n] * window_[n];
    }
    for (std::size_t n = 0; n < length; ++n)
      out[n] = denominator_[n] > 0.0 ? out[n] / denominator_[n] : 0.0;
    return out;
  }

 private:
  void BuildDenominator(int count, std::size_t length) {
    constexpr double kTiny = 1e-10;
    denominator_.assign(length, 0.0);
    for (int t = 0; t < count; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * params_.hop;
      for (int n = 0; n < params_.win; ++n)
        denominator_[start + n] += window_[n] * window_[n];
    }
    // Zeros of the window at the outermost samples carry no information;
    // anywhere else they make the inverse ill-posed.
    std::size_t lo = 0, hi = length;
    while (lo < length && denominator_[lo] < kTiny) ++lo;
    while (hi > lo && denominator_[hi - 1] < kTiny) --hi;
    for (std::size_t n = lo; n < hi; ++n)
      if (denominator_[n] < kTiny)
        throw std::invalid_argument(
            "window/hop combination has a zero overlap-add denominator");
    for (std::size_t n = 0; n < length; ++n)
      if (denominator_[n] < kTiny) denominator_[n] = 0.0;
  }

  StftParams params_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<double> frame_;
  std::vector<std::complex<double>> bins_;
  std::vector<double> denominator_;
};

void Analyze(std::span<const double> signal, const StftParams& params,
             const std::vector<double>& window, RealFft& fft,
             std::vector<double>& frame, std::vector<std::complex<double>>& bins,
             ComplexRowMatrix& out) {
  const int frames = static_cast<int>(out.rows());
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * params.hop;
    for (int n = 0; n < params.win; ++n) frame[n] = signal[start + n] * window[n];
    fft.Forward(frame, bins);
    for (int k = 0; k < params.Bins(); ++k) out(t, k) = bins[k];
  }
}

}  // namespace

std::vector<double> Istft(const ComplexSpectrogram& spec) {
  spec.params.Validate();
  if (spec.Bins() != spec.params.Bins())
    throw std::invalid_argument("spectrogram bin count does not match FFT length");
  OverlapAdd ola(spec.params);
  return ola.Run(spec.frames);
}

double SpectralInconsistency(const ComplexSpectrogram& spec,
                             const RowMatrix& target_magnitude) {
  if (spec.frames.rows() != target_magnitude.rows() ||
      spec.frames.cols() != target_magnitude.cols())
    throw std::invalid_argument("magnitude shape mismatch");
  const int bins = spec.Bins();
  const bool has_nyquist = spec.params.fft_len % 2 == 0;
  double total = 0.0;
  for (Eigen::Index t = 0; t < spec.frames.rows(); ++t) {
    for (int k = 0; k < bins; ++k) {
      const double d = std::abs(spec.frames(t, k)) - target_magnitude(t, k);
      const bool single = k == 0 || (has_nyquist && k == bins - 1);
      total += (single ? 1.0 : 2.0) * d * d;
    }
  }
  return total;
}

std::vector<double> GriffinLim(const RowMatrix& magnitude, int iterations,
                               const StftParams& params, GriffinLimTrace* trace,
                               const RowMatrix* initial_phase) {
  params.Validate();
  if (iterations < 1) throw std::invalid_argument("Griffin-Lim needs >= 1 iteration");
  if (magnitude.cols() != params.Bins())
    throw std::invalid_argument("magnitude bin count does not match FFT length");
  if ((magnitude.array() < 0.0).any() || !magnitude.allFinite())
    throw std::invalid_argument("magnitudes must be finite and non-negative");
  if (initial_phase && (initial_phase->rows() != magnitude.rows() ||
                        initial_phase->cols() != magnitude.cols()))
    throw std::invalid_argument("initial phase shape mismatch");

  ComplexSpectrogram estimate;
  estimate.params = params;
  estimate.frames.resize(magnitude.rows(), magnitude.cols());
  for (Eigen::Index t = 0; t < magnitude.rows(); ++t)
    for (Eigen::Index k = 0; k < magnitude.cols(); ++k)
      estimate.frames(t, k) = std::polar(
          magnitude(t, k), initial_phase ? (*initial_phase)(t, k) : 0.0);

  OverlapAdd ola(params);
  const std::vector<double> window = MakeWindow(params.window, params.win);
  RealFft fft(params.fft_len);
  std::vector<double> frame(params.fft_len, 0.0);
  std::vector<std::complex<double>> bins(params.Bins());
  ComplexSpectrogram rebuilt;
  rebuilt.params = params;
  rebuilt.frames.resize(magnitude.rows(), magnitude.cols());

  std::vector<double> signal = ola.Run(estimate.frames);
  Analyze(signal, params, window, fft, frame, bins, rebuilt.frames);
  if (trace) {
    trace->objective.clear();
    trace->objective.reserve(iterations);
    trace->initial_objective = SpectralInconsistency(rebuilt, magnitude);
  }
  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index t = 0; t < magnitude.rows(); ++t) {
      for (Eigen::Index k = 0; k < magnitude.cols(); ++k) {
        const std::complex<double> c = rebuilt.frames(t, k);
        const double a = std::abs(c);
        estimate.frames(t, k) = a > 0.0 ? magnitude(t, k) * (c / a)
                                        : std::complex<double>(magnitude(t, k), 0.0);
      }
    }
    signal = ola.Run(estimate.frames);
    Analyze(signal, params, window, fft, frame, bins, rebuilt.frames);
    if (trace) trace->objective.push_back(SpectralInconsistency(rebuilt, magnitude));
  }
  return signal;
}

}  // namespace avi::dsp
