// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/dsp/mel.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

namespace avi::dsp {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MelMatrix(int n_mels, int fft_len, double sample_rate) {
  if (n_mels < 1) throw std::invalid_argument("need at least one mel filter");
  if (fft_len < 2 || sample_rate <= 0.0)
    throw std::invalid_argument("invalid FFT length or sample rate");
  const int bins = fft_len / 2 + 1;
  if (n_mels > bins)
    throw std::invalid_argument("more mel filters than frequency bins");

  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = MelToHz(mel_max * i / (n_mels + 1));

  MelFilterbank fb;
  fb.sample_rate = sample_rate;
  fb.fft_len = fft_len;
  fb.weights = Eigen::MatrixXd::Zero(n_mels, bins);
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / fft_len;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb.weights(m, k) = std::max(0.0, std::min(rise, fall));
    }
    if (fb.weights.row(m).maxCoeff() <= 0.0)
      throw std::invalid_argument("mel filter " + std::to_string(m) +
                                  " covers no frequency bin");
  }
  return fb;
}

MelSpectrogram ToMel(const ComplexSpectrogram& spec, const MelFilterbank& fb,
                     double db_floor) {
  if (spec.Bins() != fb.Bins())
    throw std::invalid_argument("spectrogram and filterbank bin counts differ");
  if (!(db_floor < 0.0)) throw std::invalid_argument("dB floor must be negative");

  const RowMatrix power = spec.frames.cwiseAbs2();
  const RowMatrix mel_power = power * fb.weights.transpose();

  MelSpectrogram out;
  out.norm.db_floor = db_floor;
  out.norm.reference_power =
      std::max(mel_power.size() > 0 ? mel_power.maxCoeff() : 0.0, kMinReferencePower);
  const double amin = out.norm.reference_power * std::pow(10.0, db_floor / 10.0);
  out.values = mel_power.unaryExpr([&](double p) {
    const double db = 10.0 * std::log10(std::max(p, amin) / out.norm.reference_power);
    const double clipped = std::clamp(db, db_floor, 0.0);
    return (clipped - db_floor) / -db_floor;
  });
  return out;
}

ComplexSpectrogram InvertMel(const MelSpectrogram& mel, const MelFilterbank& fb,
                             const StftParams& params, int refine_iterations) {
  if (!mel.has_norm)
    throw std::invalid_argument("mel spectrogram lacks normalization parameters");
  if (mel.Mels() != fb.Mels() || params.Bins() != fb.Bins())
    throw std::invalid_argument("mel inversion dimension mismatch");
  if (refine_iterations < 0)
    throw std::invalid_argument("refine_iterations must be non-negative");

  ComplexSpectrogram out;
  out.params = params;
  if (mel.values.size() == 0 || mel.values.maxCoeff() <= 0.0) {
    out.frames = ComplexRowMatrix::Zero(mel.Frames(), fb.Bins());
    return out;
  }

  const double floor = mel.norm.db_floor;
  const double ref = mel.norm.reference_power;
  // Cells at the floor stand for "at most the floor power"; targeting the
  // floor itself keeps neighbouring bands from being starved.
  const RowMatrix mel_power = mel.values.unaryExpr([&](double v) {
    const double db = std::clamp(v, 0.0, 1.0) * -floor + floor;
    return ref * std::pow(10.0, db / 10.0);
  });
  const Eigen::MatrixXd pinv =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(fb.weights.transpose())
          .pseudoInverse();  // mels x bins
  RowMatrix power = (mel_power * pinv).cwiseMax(0.0);

  // Clipping breaks the mel constraint. Multiplicative updates restore it
  // while staying non-negative; bins zeroed by the clip get a tiny seed so
  // they can recover.
  if (refine_iterations > 0) {
    const Eigen::RowVectorXd coverage = fb.weights.colwise().sum();
    // Each mel cell's power spread evenly over its filter, per unit weight.
    const Eigen::VectorXd area = fb.weights.rowwise().sum();
    RowMatrix spread = (mel_power * area.cwiseInverse().asDiagonal()) * fb.weights;
    for (Eigen::Index k = 0; k < spread.cols(); ++k)
      if (coverage(k) > 0.0) spread.col(k) /= coverage(k);
    power = power.cwiseMax(0.1 * spread);
    for (int it = 0; it < refine_iterations; ++it) {
      const RowMatrix estimate = (power * fb.weights.transpose()).cwiseMax(1e-300);
      const RowMatrix gain = mel_power.cwiseQuotient(estimate) * fb.weights;
      for (Eigen::Index t = 0; t < power.rows(); ++t)
        for (Eigen::Index k = 0; k < power.cols(); ++k)
          power(t, k) *= coverage(k) > 0.0 ? gain(t, k) / coverage(k) : 0.0;
    }
    // The multiplicative updates stall where the exact answer has bins at
    // zero. Finish each frame with the smallest correction that meets every
    // mel cell exactly; bins that would turn negative are pinned at zero.
    const Eigen::MatrixXd& w = fb.weights;
    for (Eigen::Index t = 0; t < power.rows(); ++t) {
      Eigen::VectorXd p = power.row(t).transpose();
      const Eigen::VectorXd target = mel_power.row(t).transpose();
      Eigen::VectorXd free = (coverage.transpose().array() > 0.0).cast<double>();
      for (int step = 0; step < 64; ++step) {
        const Eigen::VectorXd r = target - w * p;
        if ((r.array().abs() / target.array()).maxCoeff() < 1e-9) break;
        const Eigen::MatrixXd wf = w * free.asDiagonal();
        Eigen::MatrixXd gram = wf * wf.transpose();
        gram.diagonal().array() += 1e-14 * gram.diagonal().maxCoeff();
        const Eigen::VectorXd delta = wf.transpose() * gram.ldlt().solve(r);
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 0; k < p.size(); ++k)
          if (delta(k) < 0.0 && p(k) + alpha * delta(k) < 0.0) {
            alpha = -p(k) / delta(k);
            blocking = k;
          }
        p += alpha * delta;
        if (blocking < 0) continue;
        p(blocking) = 0.0;
        free(blocking) = 0.0;
      }
      power.row(t) = p.cwiseMax(0.0).transpose();
    }
  }
  out.frames = power.cwiseSqrt().cast<std::complex<double>>();
  return out;
}

}  // namespace avi::dsp
