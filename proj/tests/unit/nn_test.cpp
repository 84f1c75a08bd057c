// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "avinpaint/common/random.h"
#include "avinpaint/losses/losses.h"
#include "avinpaint/nn/grad_check.h"
#include "avinpaint/nn/layers.h"
#include "avinpaint/nn/tape.h"

namespace avi::nn {
namespace {

using M = Matrix<double>;

M Random(std::uint64_t seed, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Rng rng(seed);
  M m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-scale, scale);
  return m;
}

// Sum of all entries; test-only reduction.
Var Sum(Tape<double>& tape, Var x) {
  M out(1, 1);
  out(0, 0) = tape.Value(x).sum();
  return tape.Record(std::move(out), Layout{1, 1}, [x](Tape<double>& t, Var self) {
    t.Grad(x).array() += t.Grad(self)(0, 0);
  });
}

void RandomizeLstm(LstmLayer<double>& l, std::uint64_t seed) {
  l.kernel.value = Random(seed, l.In(), 4 * l.Hidden());
  l.recurrent_kernel.value = Random(seed + 1, l.Hidden(), 4 * l.Hidden());
  l.bias.value = Random(seed + 2, 1, 4 * l.Hidden());
}

// Scalar LSTM cell, gate blocks ordered i, f, g, o.
M ReferenceLstm(const M& x, const LstmLayer<double>& l) {
  const int h = l.Hidden();
  const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  M out(x.rows(), h);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    std::vector<double> nh(h), nc(h);
    for (int u = 0; u < h; ++u) {
      double z[4];
      for (int g = 0; g < 4; ++g) {
        const int col = g * h + u;
        double acc = l.bias.value(0, col);
        for (Eigen::Index k = 0; k < x.cols(); ++k) acc += x(t, k) * l.kernel.value(k, col);
        for (int k = 0; k < h; ++k) acc += hs[k] * l.recurrent_kernel.value(k, col);
        z[g] = acc;
      }
      nc[u] = sig(z[1]) * cs[u] + sig(z[0]) * std::tanh(z[2]);
      nh[u] = sig(z[3]) * std::tanh(nc[u]);
    }
    hs = nh;
    cs = nc;
    for (int u = 0; u < h; ++u) out(t, u) = hs[u];
  }
  return out;
}

TEST(Dense, IdentityReluSoftmax) {
  Tape<double> tape;
  DenseLayer<double> id("d", 3, 3, Activation::kLinear);
  id.kernel.value = M::Identity(3, 3);
  id.bias.value.setZero();
  const M x = Random(1, 5, 3);
  EXPECT_EQ(tape.Value(Dense(tape, tape.Input(x), id)), x);

  DenseLayer<double> relu("r", 2, 2, Activation::kRelu);
  relu.kernel.value = M::Identity(2, 2);
  relu.bias.value.setZero();
  M v(1, 2);
  v << -1, 2;
  EXPECT_EQ(tape.Value(Dense(tape, tape.Input(v), relu)), (M(1, 2) << 0, 2).finished());

  DenseLayer<double> sm("s", 2, 4, Activation::kSoftmax);
  sm.kernel.value.setZero();
  sm.bias.value.setZero();
  const M p = tape.Value(Dense(tape, tape.Input(Random(2, 3, 2)), sm));
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p.data()[i], 0.25);
}

TEST(Dense, SoftmaxRowsAreDistributions) {
  Tape<double> tape;
  DenseLayer<double> sm("s", 6, 5, Activation::kSoftmax);
  sm.kernel.value = Random(3, 6, 5, 4.0);
  const M p = tape.Value(Dense(tape, tape.Input(Random(4, 20, 6, 3.0)), sm));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-6);
    EXPECT_GT(p.row(r).minCoeff(), 0.0);
    EXPECT_LT(p.row(r).maxCoeff(), 1.0);
  }
}

TEST(Dense, RejectsShapeMismatch) {
  Tape<double> tape;
  DenseLayer<double> d("d", 3, 2, Activation::kLinear);
  EXPECT_ANY_THROW(Dense(tape, tape.Input(M::Zero(4, 5)), d));
}

TEST(Initialization, GlorotOrthogonalForgetBias) {
  Rng rng(7);
  LstmLayer<double> l("l", 10, 8);
  InitLstm(l, rng);
  const double limit = std::sqrt(6.0 / (10 + 32));
  EXPECT_LE(l.kernel.value.cwiseAbs().maxCoeff(), limit);
  // Each H x H recurrent block of an orthogonal H x 4H matrix: rows orthonormal.
  const M u = l.recurrent_kernel.value;
  EXPECT_LT((u * u.transpose() - M::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-9);
  for (int c = 0; c < 32; ++c) EXPECT_EQ(l.bias.value(0, c), (c >= 8 && c < 16) ? 1.0 : 0.0);
  M q(6, 6);
  FillOrthogonal(q, rng);
  EXPECT_LT((q.transpose() * q - M::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lstm, ZeroParametersGiveZeroStates) {
  Tape<double> tape;
  LstmLayer<double> l("l", 3, 4);
  l.kernel.value.setZero();
  l.recurrent_kernel.value.setZero();
  l.bias.value.setZero();
  EXPECT_EQ(tape.Value(Lstm(tape, tape.Input(Random(1, 7, 3)), l)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lstm, MatchesScalarReference) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LstmLayer<double> l("l", 3, 4);
    RandomizeLstm(l, 10 * seed);
    const M x = Random(100 + seed, 3, 3);
    Tape<double> tape;
    const M got = tape.Value(Lstm(tape, tape.Input(x), l));
    EXPECT_LT((got - ReferenceLstm(x, l)).cwiseAbs().maxCoeff(), 1e-6);
    // T = 1 is one cell step.
    const M one = tape.Value(Lstm(tape, tape.Input(M(x.topRows(1))), l));
    EXPECT_LT((one - ReferenceLstm(x.topRows(1), l)).cwiseAbs().maxCoeff(), 1e-12);
    // Reverse mode equals reversing, running forward, reversing back.
    const M rev = tape.Value(Lstm(tape, tape.Input(x), l, true));
    const M expected = ReferenceLstm(x.colwise().reverse(), l).colwise().reverse();
    EXPECT_LT((rev - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lstm, BatchedMatchesPerSequence) {
  LstmLayer<double> l("l", 2, 3);
  RandomizeLstm(l, 5);
  const M a = Random(1, 4, 2), b = Random(2, 4, 2);
  M batched(8, 2);
  for (int t = 0; t < 4; ++t) {
    batched.row(2 * t) = a.row(t);
    batched.row(2 * t + 1) = b.row(t);
  }
  Tape<double> tape;
  const M out = tape.Value(Lstm(tape, tape.Input(batched, Layout{4, 2}), l));
  const M ra = ReferenceLstm(a, l), rb = ReferenceLstm(b, l);
  for (int t = 0; t < 4; ++t) {
    EXPECT_LT((out.row(2 * t) - ra.row(t)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((out.row(2 * t + 1) - rb.row(t)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Blstm, WidthAndPalindromeSymmetry) {
  BlstmLayer<double> wide("w", 64, 256);
  EXPECT_EQ(wide.Out(), 512);

  BlstmLayer<double> l("b", 3, 4);
  RandomizeLstm(l.forward, 1);
  l.backward.kernel.value = l.forward.kernel.value;
  l.backward.recurrent_kernel.value = l.forward.recurrent_kernel.value;
  l.backward.bias.value = l.forward.bias.value;
  M x = Random(2, 7, 3);
  for (int t = 0; t < 3; ++t) x.row(6 - t) = x.row(t);
  Tape<double> tape;
  const M y = tape.Value(Blstm(tape, tape.Input(x), l));
  ASSERT_EQ(y.cols(), 8);
  for (int t = 0; t < 7; ++t)
    EXPECT_LT((y.row(t).leftCols(4) - y.row(6 - t).rightCols(4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Blstm, ReversedInputWithSwappedDirections) {
  BlstmLayer<double> l("b", 3, 4);
  RandomizeLstm(l.forward, 1);
  RandomizeLstm(l.backward, 50);
  BlstmLayer<double> swapped("s", 3, 4);
  swapped.forward.kernel.value = l.backward.kernel.value;
  swapped.forward.recurrent_kernel.value = l.backward.recurrent_kernel.value;
  swapped.forward.bias.value = l.backward.bias.value;
  swapped.backward.kernel.value = l.forward.kernel.value;
  swapped.backward.recurrent_kernel.value = l.forward.recurrent_kernel.value;
  swapped.backward.bias.value = l.forward.bias.value;
  const M x = Random(3, 6, 3);
  Tape<double> tape;
  const M y = tape.Value(Blstm(tape, tape.Input(x), l));
  const M r = tape.Value(Blstm(tape, tape.Input(M(x.colwise().reverse())), swapped));
  for (int t = 0; t < 6; ++t) {
    EXPECT_LT((r.row(t).leftCols(4) - y.row(5 - t).rightCols(4)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((r.row(t).rightCols(4) - y.row(5 - t).leftCols(4)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Blstm, ZeroInputZeroParams) {
  BlstmLayer<double> l("b", 3, 2);
  for (auto* p : l.Parameters()) p->value.setZero();
  Tape<double> tape;
  EXPECT_EQ(tape.Value(Blstm(tape, tape.Input(M::Zero(5, 3)), l)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Concat, ShapesOrderAndEmpty) {
  Tape<double> tape;
  const M a = Random(1, 149, 64), b = Random(2, 149, 64);
  const M c = tape.Value(Concat(tape, tape.Input(a), tape.Input(b)));
  ASSERT_EQ(c.cols(), 128);
  EXPECT_EQ(M(c.leftCols(64)), a);
  EXPECT_EQ(M(c.rightCols(64)), b);
  EXPECT_EQ(tape.Value(Concat(tape, tape.Input(a), tape.Input(M(149, 0)))), a);
  EXPECT_ANY_THROW(Concat(tape, tape.Input(a), tape.Input(M::Zero(148, 2))));
}

TEST(Backward, LinearSumGradient) {
  DenseLayer<double> d("d", 3, 2, Activation::kLinear);
  d.kernel.value = Random(1, 3, 2);
  const M x = Random(2, 4, 3);
  d.kernel.ZeroGrad();
  d.bias.ZeroGrad();
  Tape<double> tape;
  tape.Backward(Sum(tape, Dense(tape, tape.Input(x), d)));
  // d/dW sum(xW) = x^T 1.
  const M expected = x.transpose() * M::Ones(4, 2);
  EXPECT_LT((d.kernel.grad - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(d.bias.grad, M::Constant(1, 2, 4.0));
}

TEST(Backward, ReluNegativeGradientIsZero) {
  DenseLayer<double> d("d", 1, 1, Activation::kRelu);
  d.kernel.value(0, 0) = 1.0;
  d.bias.value(0, 0) = -5.0;
  d.kernel.ZeroGrad();
  d.bias.ZeroGrad();
  Tape<double> tape;
  tape.Backward(Sum(tape, Dense(tape, tape.Input(M::Constant(1, 1, 2.0)), d)));
  EXPECT_EQ(d.kernel.grad(0, 0), 0.0);
  EXPECT_EQ(d.bias.grad(0, 0), 0.0);
}

TEST(Backward, SharedParameterAccumulates) {
  DenseLayer<double> d("d", 2, 2, Activation::kLinear);
  d.kernel.value = Random(1, 2, 2);
  d.kernel.ZeroGrad();
  d.bias.ZeroGrad();
  const M x = Random(2, 3, 2);
  Tape<double> tape;
  const Var once = Sum(tape, Dense(tape, tape.Input(x), d));
  const Var twice = Sum(tape, Dense(tape, tape.Input(x), d));
  tape.Backward(WeightedSum(tape, once, twice, 1.0));
  EXPECT_LT((d.kernel.grad - 2.0 * x.transpose() * M::Ones(3, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, RejectsForeignOrNonScalarLoss) {
  Tape<double> tape;
  const Var v = tape.Input(M::Zero(2, 2));
  EXPECT_ANY_THROW(tape.Backward(v));
  EXPECT_ANY_THROW(tape.Backward(Var{}));
  EXPECT_ANY_THROW(tape.Backward(Var{99}));
}

TEST(Backward, NonFiniteGradientThrows) {
  DenseLayer<double> d("d", 1, 1, Activation::kLinear);
  d.kernel.ZeroGrad();
  d.bias.ZeroGrad();
  Tape<double> tape;
  // Rejected as soon as it reaches the tape, before any backward pass.
  EXPECT_THROW(Dense(tape, tape.Input(M::Constant(1, 1, std::nan(""))), d), NumericalError);
}

TEST(GradCheck, DenseAllActivations) {
  for (auto act : {Activation::kLinear, Activation::kRelu, Activation::kSigmoid, Activation::kTanh,
                   Activation::kSoftmax}) {
    DenseLayer<double> d("d", 4, 3, act);
    d.kernel.value = Random(1, 4, 3);
    d.bias.value = Random(2, 1, 3);
    const M x = Random(3, 5, 4);
    const M target = Random(4, 5, 3);
    const auto report = GradCheck(
        [&](Tape<double>& t) { return losses::Mse(t, Dense(t, t.Input(x), d), target); },
        d.Parameters());
    EXPECT_LT(report.max_rel_error, 1e-7) << ActivationName(act);
  }
}

TEST(GradCheck, LstmAndBlstm) {
  LstmLayer<double> l("l", 3, 4);
  RandomizeLstm(l, 3);
  const M x = Random(5, 6, 3);
  const M target = Random(6, 6, 4);
  for (bool reverse : {false, true}) {
    const auto report = GradCheck(
        [&](Tape<double>& t) { return losses::Mse(t, Lstm(t, t.Input(x), l, reverse), target); },
        l.Parameters());
    EXPECT_LT(report.max_rel_error, 1e-5);
  }
  BlstmLayer<double> b("b", 3, 2);
  RandomizeLstm(b.forward, 7);
  RandomizeLstm(b.backward, 8);
  const M x2 = Random(9, 10, 3);  // 5 steps x batch 2
  const M t2 = Random(10, 10, 4);
  const auto report = GradCheck(
      [&](Tape<double>& t) { return losses::Mse(t, Blstm(t, t.Input(x2, Layout{5, 2}), b), t2); },
      b.Parameters());
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(GradCheck, FrozenParameterExcluded) {
  DenseLayer<double> d("d", 2, 2, Activation::kTanh);
  d.bias.frozen = true;
  const M x = Random(1, 3, 2);
  const M target = Random(2, 3, 2);
  const auto report = GradCheck(
      [&](Tape<double>& t) { return losses::Mse(t, Dense(t, t.Input(x), d), target); },
      d.Parameters());
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_EQ(report.entries[0].name, "d.kernel");
}

TEST(GradCheck, DetectsWrongGradient) {
  DenseLayer<double> d("d", 2, 2, Activation::kLinear);
  d.kernel.value = Random(1, 2, 2);
  const M x = Random(2, 3, 2);
  // A node whose backward rule doubles the true gradient.
  auto build = [&](Tape<double>& t) {
    const Var y = Dense(t, t.Input(x), d);
    M out(1, 1);
    out(0, 0) = t.Value(y).sum();
    return t.Record(std::move(out), Layout{1, 1}, [y](Tape<double>& tp, Var self) {
      tp.Grad(y).array() += 2.0 * tp.Grad(self)(0, 0);
    });
  };
  EXPECT_FALSE(GradCheck(build, d.Parameters()).Passed(1e-4));
}

TEST(Forward, DeterministicInFloat) {
  Rng r1(3), r2(3);
  LstmLayer<float> a("a", 4, 5), b("b", 4, 5);
  InitLstm(a, r1);
  InitLstm(b, r2);
  const Matrix<float> x = Random(1, 7, 4).cast<float>();
  Tape<float> t1, t2;
  EXPECT_EQ(t1.Value(Lstm(t1, t1.Input(x), a)), t2.Value(Lstm(t2, t2.Input(x), b)));
}

TEST(Activation, Names) {
  for (auto act : {Activation::kLinear, Activation::kRelu, Activation::kSigmoid, Activation::kTanh,
                   Activation::kSoftmax})
    EXPECT_EQ(ParseActivation(ActivationName(act)), act);
  EXPECT_ANY_THROW(ParseActivation("gelu"));
}

}  // namespace
}  // namespace avi::nn
