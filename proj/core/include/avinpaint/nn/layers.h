// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "avinpaint/common/random.h"
#include "avinpaint/nn/tape.h"

namespace avi::nn {

enum class Activation { kLinear, kRelu, kSigmoid, kTanh, kSoftmax };

Activation ParseActivation(std::string_view name);
std::string_view ActivationName(Activation a);

// Time-distributed fully connected layer: act(x W + b) on every row.
template <typename S>
struct DenseLayer {
  Parameter<S> kernel;  // in x out
  Parameter<S> bias;    // 1 x out
  Activation activation = Activation::kLinear;

  DenseLayer() = default;
  DenseLayer(std::string name, int in, int out, Activation act);

  int In() const { return static_cast<int>(kernel.value.rows()); }
  int Out() const { return static_cast<int>(kernel.value.cols()); }
  std::vector<Parameter<S>*> Parameters() { return {&kernel, &bias}; }
};

// Gate blocks are packed [input, forget, cell, output] along the columns,
// the layout Keras uses for its LSTM weights.
template <typename S>
struct LstmLayer {
  Parameter<S> kernel;            // in x 4H
  Parameter<S> recurrent_kernel;  // H x 4H
  Parameter<S> bias;              // 1 x 4H

  LstmLayer() = default;
  LstmLayer(std::string name, int in, int hidden);

  int In() const { return static_cast<int>(kernel.value.rows()); }
  int Hidden() const { return static_cast<int>(recurrent_kernel.value.rows()); }
  std::vector<Parameter<S>*> Parameters() { return {&kernel, &recurrent_kernel, &bias}; }
};

template <typename S>
struct BlstmLayer {
  LstmLayer<S> forward;
  LstmLayer<S> backward;

  BlstmLayer() = default;
  BlstmLayer(const std::string& name, int in, int hidden);

  int In() const { return forward.In(); }
  int Out() const { return 2 * forward.Hidden(); }
  std::vector<Parameter<S>*> Parameters();
};

// Glorot-uniform kernels, zero biases.
template <typename S>
void InitDense(DenseLayer<S>& layer, Rng& rng);

// Glorot-uniform input kernel, orthogonal recurrent kernel, zero bias with
// the forget-gate block set to 1.
template <typename S>
void InitLstm(LstmLayer<S>& layer, Rng& rng);

// Rows of `out` become orthonormal (or columns, whichever is fewer).
template <typename S>
void FillOrthogonal(Matrix<S>& out, Rng& rng);

// --- tape operations ---

template <typename S>
Var Dense(Tape<S>& tape, Var x, DenseLayer<S>& layer);

// h_0 = c_0 = 0. With `reverse`, each sequence is read from its last step to
// its first, and output row t still refers to input step t.
template <typename S>
Var Lstm(Tape<S>& tape, Var x, LstmLayer<S>& layer, bool reverse = false);

// [forward(x), reverse(x)] along features.
template <typename S>
Var Blstm(Tape<S>& tape, Var x, BlstmLayer<S>& layer);

// Per-step feature concatenation; layouts must agree.
template <typename S>
Var Concat(Tape<S>& tape, Var a, Var b);

// a + weight * b for 1x1 nodes.
template <typename S>
Var WeightedSum(Tape<S>& tape, Var a, Var b, S weight);

// Row-wise activation, used by Dense and exposed for tests.
template <typename S>
Matrix<S> Activate(const Matrix<S>& z, Activation act);

}  // namespace avi::nn
