// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avinpaint/common/matrix.h"
#include "avinpaint/nn/tape.h"

namespace avi::losses {

// Mean of (y - x)^2 over all cells. `grad`, when given, receives
// 2 (y - x) / cells.
double MseLoss(const RowMatrix& y, const RowMatrix& x, RowMatrix* grad = nullptr);

// Tape version over a batched sequence node. With `row_weights` (one 0/1 per
// row) only the selected rows count and the mean runs over their cells; no
// selected rows gives a zero loss.
template <typename S>
nn::Var Mse(nn::Tape<S>& tape, nn::Var y, const nn::Matrix<S>& target,
            const std::vector<std::uint8_t>* row_weights = nullptr);

struct CtcResult {
  double nll = 0.0;       // +infinity when infeasible
  bool feasible = true;
  RowMatrix grad;         // d nll / d logits; all zero when infeasible
};

// Smallest number of frames that can emit `target`: its length plus one
// separating blank per adjacent repeat.
int CtcMinFrames(std::span<const int> target);

// Negative log-likelihood of `target` under per-frame softmax(logits).
// logits is T x (V + 1) with the blank at column V. Labels must lie in
// [0, V). Forward-backward runs in log space.
CtcResult CtcLoss(const RowMatrix& logits, std::span<const int> target);

// Same quantity by enumerating all (V + 1)^T frame paths. Throws
// std::invalid_argument when that exceeds one million paths.
double CtcBruteForce(const RowMatrix& logits, std::span<const int> target);

struct CtcBatchStats {
  int feasible = 0;
  int infeasible = 0;
  double mean_nll = 0.0;  // over feasible sequences
};

// Mean CTC over the batch of a time-major logits node (one target per
// sequence). Infeasible sequences contribute neither loss nor gradient and
// are counted in `stats`.
template <typename S>
nn::Var Ctc(nn::Tape<S>& tape, nn::Var logits, const std::vector<std::vector<int>>& targets,
            CtcBatchStats* stats = nullptr);

struct LossWeights {
  double lambda = 0.001;
};

// mse + lambda * ctc. Throws std::invalid_argument on NaN or negative lambda.
double JointLoss(double mse, double ctc, const LossWeights& w);

template <typename S>
nn::Var Joint(nn::Tape<S>& tape, nn::Var mse, nn::Var ctc, const LossWeights& w);

}  // namespace avi::losses
