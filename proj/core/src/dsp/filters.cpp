// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/dsp/filters.h"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace avi::dsp {
namespace {

// Kaiser-windowed sinc with DC gain `up`, centred at index half_len.
std::vector<double> DesignAntiAlias(int up, int down) {
  constexpr double kRejectionDb = 60.0;
  const double cutoff = 1.0 / (2.0 * std::max(up, down));
  const double roll_off = cutoff / 10.0;
  const auto half_len = static_cast<long>(
      std::ceil((kRejectionDb - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (kRejectionDb - 8.7);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);

  std::vector<double> h(2 * half_len + 1);
  for (long k = -half_len; k <= half_len; ++k) {
    const double x = 2.0 * cutoff * static_cast<double>(k);
    const double sinc = k == 0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double r = static_cast<double>(k) / static_cast<double>(half_len);
    const double kaiser =
        std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
        i0_beta;
    h[k + half_len] = 2.0 * up * cutoff * sinc * kaiser;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v *= up / sum;
  return h;
}

void CheckCoeff(double coeff) {
  if (!(coeff >= 0.0 && coeff < 1.0))
    throw std::invalid_argument("emphasis coefficient must lie in [0, 1)");
}

}  // namespace

Waveform Resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0)
    throw std::invalid_argument("target sample rate must be positive");
  if (w.sample_rate <= 0)
    throw std::invalid_argument("source sample rate must be positive");
  if (target_rate == w.sample_rate) return w;

  const int g = std::gcd(target_rate, w.sample_rate);
  const int up = target_rate / g;
  const int down = w.sample_rate / g;
  if (up > 4096 || down > 4096)
    throw std::invalid_argument("resampling ratio is not a small rational");

  const std::vector<double> h = DesignAntiAlias(up, down);
  const long half_len = static_cast<long>(h.size() - 1) / 2;
  const long n_in = static_cast<long>(w.samples.size());
  const long n_out = (n_in * up + down - 1) / down;

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  // Output m sits at position m*down on the zero-stuffed grid; input n at
  // n*up. Only taps with |m*down - n*up| <= half_len contribute.
  for (long m = 0; m < n_out; ++m) {
    const long centre = m * down;
    long n_lo = (centre - half_len + up - 1) / up;
    if (centre - half_len < 0) n_lo = 0;
    const long n_hi = std::min(n_in - 1, (centre + half_len) / up);
    double acc = 0.0;
    for (long n = std::max(0L, n_lo); n <= n_hi; ++n)
      acc += h[static_cast<std::size_t>(centre - n * up + half_len)] * w.samples[n];
    out.samples[m] = acc;
  }
  return out;
}

Waveform Preemphasize(const Waveform& w, double coeff) {
  CheckCoeff(coeff);
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate};
  for (std::size_t n = 0; n < w.samples.size(); ++n)
    out.samples[n] = n == 0 ? w.samples[0] : w.samples[n] - coeff * w.samples[n - 1];
  return out;
}

Waveform Deemphasize(const Waveform& w, double coeff) {
  CheckCoeff(coeff);
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate};
  double prev = 0.0;
  for (std::size_t n = 0; n < w.samples.size(); ++n) {
    prev = w.samples[n] + coeff * prev;
    out.samples[n] = prev;
  }
  return out;
}

}  // namespace avi::dsp
