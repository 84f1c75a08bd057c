// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/losses/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "avinpaint/nn/layers.h"

namespace avi::losses {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

RowMatrix LogSoftmax(const RowMatrix& logits) {
  RowMatrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double peak = logits.row(t).maxCoeff();
    const double lse = peak + std::log((logits.row(t).array() - peak).exp().sum());
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

void CheckTarget(const RowMatrix& logits, std::span<const int> target) {
  if (logits.cols() < 1) throw std::invalid_argument("CTC logits need at least the blank column");
  const int v = static_cast<int>(logits.cols()) - 1;
  for (int label : target)
    if (label < 0 || label >= v)
      throw std::invalid_argument("CTC label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(v) + ")");
  if (!logits.allFinite()) throw std::invalid_argument("CTC logits are not finite");
}

}  // namespace

double MseLoss(const RowMatrix& y, const RowMatrix& x, RowMatrix* grad) {
  if (y.rows() != x.rows() || y.cols() != x.cols())
    throw std::invalid_argument("mse: shape mismatch");
  if (y.size() == 0) throw std::invalid_argument("mse: empty input");
  const RowMatrix diff = y - x;
  if (grad) *grad = diff * (2.0 / static_cast<double>(diff.size()));
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

template <typename S>
nn::Var Mse(nn::Tape<S>& tape, nn::Var y, const nn::Matrix<S>& target,
            const std::vector<std::uint8_t>* row_weights) {
  const nn::Matrix<S>& pred = tape.Value(y);
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse: shape mismatch");
  if (row_weights && static_cast<Eigen::Index>(row_weights->size()) != pred.rows())
    throw std::invalid_argument("mse: row weight count differs from rows");
  nn::Matrix<S> diff = pred - target;
  if (row_weights)
    for (Eigen::Index r = 0; r < diff.rows(); ++r)
      if (!(*row_weights)[static_cast<std::size_t>(r)]) diff.row(r).setZero();
  const Eigen::Index rows =
      row_weights ? std::count(row_weights->begin(), row_weights->end(), 1) : pred.rows();
  const double cells = static_cast<double>(rows * pred.cols());
  nn::Matrix<S> out(1, 1);
  out(0, 0) = cells > 0 ? static_cast<S>(diff.template cast<double>().squaredNorm() / cells) : S(0);
  return tape.Record(std::move(out), nn::Layout{1, 1},
                     [y, diff = std::move(diff), cells](nn::Tape<S>& t, nn::Var self) {
                       if (cells == 0) return;
                       const S g = t.Grad(self)(0, 0);
                       t.Grad(y) += diff * static_cast<S>(2.0 * g / cells);
                     });
}

int CtcMinFrames(std::span<const int> target) {
  int frames = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++frames;
  return frames;
}

CtcResult CtcLoss(const RowMatrix& logits, std::span<const int> target) {
  CheckTarget(logits, target);
  const Eigen::Index frames = logits.rows();
  const int blank = static_cast<int>(logits.cols()) - 1;
  CtcResult result;
  result.grad = RowMatrix::Zero(frames, logits.cols());
  if (frames < 1 || CtcMinFrames(target) > frames) {
    result.feasible = false;
    result.nll = std::numeric_limits<double>::infinity();
    return result;
  }

  // Blank-extended target: blank, l1, blank, l2, ..., blank.
  const int states = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> ext(static_cast<std::size_t>(states), blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  const RowMatrix logp = LogSoftmax(logits);
  // alpha includes the emission at t; beta covers frames after t.
  RowMatrix alpha = RowMatrix::Constant(frames, states, kNegInf);
  RowMatrix beta = RowMatrix::Constant(frames, states, kNegInf);
  alpha(0, 0) = logp(0, ext[0]);
  if (states > 1) alpha(0, 1) = logp(0, ext[1]);
  for (Eigen::Index t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + logp(t, ext[s]);
    }
  }
  beta(frames - 1, states - 1) = 0.0;
  if (states > 1) beta(frames - 1, states - 2) = 0.0;
  for (Eigen::Index t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < states; ++s) {
      double b = beta(t + 1, s) + logp(t + 1, ext[s]);
      if (s + 1 < states) b = LogAdd(b, beta(t + 1, s + 1) + logp(t + 1, ext[s + 1]));
      if (s + 2 < states && can_skip(s + 2))
        b = LogAdd(b, beta(t + 1, s + 2) + logp(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }
  double log_p = alpha(frames - 1, states - 1);
  if (states > 1) log_p = LogAdd(log_p, alpha(frames - 1, states - 2));
  result.nll = -log_p;

  for (Eigen::Index t = 0; t < frames; ++t) {
    std::vector<double> occupancy(static_cast<std::size_t>(logits.cols()), kNegInf);
    for (int s = 0; s < states; ++s)
      occupancy[ext[s]] = LogAdd(occupancy[ext[s]], alpha(t, s) + beta(t, s));
    for (Eigen::Index k = 0; k < logits.cols(); ++k)
      result.grad(t, k) = std::exp(logp(t, k)) - std::exp(occupancy[k] - log_p);
  }
  return result;
}

double CtcBruteForce(const RowMatrix& logits, std::span<const int> target) {
  CheckTarget(logits, target);
  const Eigen::Index frames = logits.rows();
  const int classes = static_cast<int>(logits.cols());
  const int blank = classes - 1;
  double paths = 1.0;
  for (Eigen::Index t = 0; t < frames; ++t) paths *= classes;
  if (paths > 1e6) throw std::invalid_argument("CTC brute force limited to 1e6 paths");

  const RowMatrix logp = LogSoftmax(logits);
  std::vector<int> path(static_cast<std::size_t>(frames), 0);
  std::vector<int> collapsed;
  double total = kNegInf;
  for (long n = 0; n < static_cast<long>(paths); ++n) {
    long code = n;
    for (auto& p : path) {
      p = static_cast<int>(code % classes);
      code /= classes;
    }
    collapsed.clear();
    int prev = -1;
    for (int p : path) {
      if (p != prev && p != blank) collapsed.push_back(p);
      prev = p;
    }
    if (!std::equal(collapsed.begin(), collapsed.end(), target.begin(), target.end())) continue;
    double lp = 0.0;
    for (Eigen::Index t = 0; t < frames; ++t) lp += logp(t, path[static_cast<std::size_t>(t)]);
    total = LogAdd(total, lp);
  }
  return -total;
}

template <typename S>
nn::Var Ctc(nn::Tape<S>& tape, nn::Var logits, const std::vector<std::vector<int>>& targets,
            CtcBatchStats* stats) {
  const nn::Matrix<S>& value = tape.Value(logits);
  const nn::Layout layout = tape.GetLayout(logits);
  if (static_cast<Eigen::Index>(targets.size()) != layout.batch)
    throw std::invalid_argument("ctc: one target per sequence required");
  const Eigen::Index steps = layout.steps, batch = layout.batch;
  nn::Matrix<S> grad = nn::Matrix<S>::Zero(value.rows(), value.cols());
  CtcBatchStats local;
  double sum = 0.0;
  RowMatrix seq(steps, value.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index t = 0; t < steps; ++t)
      seq.row(t) = value.row(t * batch + b).template cast<double>();
    const CtcResult r = CtcLoss(seq, targets[static_cast<std::size_t>(b)]);
    if (!r.feasible) {
      ++local.infeasible;
      continue;
    }
    ++local.feasible;
    sum += r.nll;
    for (Eigen::Index t = 0; t < steps; ++t)
      grad.row(t * batch + b) = r.grad.row(t).template cast<S>();
  }
  local.mean_nll = local.feasible > 0 ? sum / local.feasible : 0.0;
  if (local.feasible > 0) grad /= static_cast<S>(local.feasible);
  if (stats) *stats = local;
  nn::Matrix<S> out(1, 1);
  out(0, 0) = static_cast<S>(local.mean_nll);
  return tape.Record(std::move(out), nn::Layout{1, 1},
                     [logits, grad = std::move(grad)](nn::Tape<S>& t, nn::Var self) {
                       t.Grad(logits) += grad * t.Grad(self)(0, 0);
                     });
}

double JointLoss(double mse, double ctc, const LossWeights& w) {
  if (std::isnan(mse) || std::isnan(ctc) || std::isnan(w.lambda))
    throw std::invalid_argument("joint loss: NaN input");
  if (w.lambda < 0) throw std::invalid_argument("joint loss: lambda must be non-negative");
  return mse + w.lambda * ctc;
}

template <typename S>
nn::Var Joint(nn::Tape<S>& tape, nn::Var mse, nn::Var ctc, const LossWeights& w) {
  JointLoss(tape.Value(mse)(0, 0), tape.Value(ctc)(0, 0), w);
  return nn::WeightedSum(tape, mse, ctc, static_cast<S>(w.lambda));
}

#define AVI_INSTANTIATE_LOSSES(S)                                                           \
  template nn::Var Mse<S>(nn::Tape<S>&, nn::Var, const nn::Matrix<S>&,                     \
                          const std::vector<std::uint8_t>*);                                \
  template nn::Var Ctc<S>(nn::Tape<S>&, nn::Var, const std::vector<std::vector<int>>&,      \
                          CtcBatchStats*);                                                  \
  template nn::Var Joint<S>(nn::Tape<S>&, nn::Var, nn::Var, const LossWeights&);

AVI_INSTANTIATE_LOSSES(float)
AVI_INSTANTIATE_LOSSES(double)

}  // namespace avi::losses
