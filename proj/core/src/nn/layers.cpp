// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/nn/layers.h"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <Eigen/QR>

namespace avi::nn {

Activation ParseActivation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  if (name == "softmax") return Activation::kSoftmax;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view ActivationName(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftmax: return "softmax";
  }
  return "linear";
}

namespace {

template <typename S>
Parameter<S> MakeParam(const std::string& layer, const char* role, Eigen::Index rows,
                       Eigen::Index cols) {
  Parameter<S> p;
  p.layer = layer;
  p.role = role;
  p.value = Matrix<S>::Zero(rows, cols);
  p.grad = Matrix<S>::Zero(rows, cols);
  return p;
}

template <typename S>
S Sigmoid(S z) {
  return z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
}

template <typename S>
void GlorotUniform(Matrix<S>& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<S>(rng.Uniform(-limit, limit));
}

}  // namespace

template <typename S>
DenseLayer<S>::DenseLayer(std::string name, int in, int out, Activation act)
    : kernel(MakeParam<S>(name, "kernel", in, out)),
      bias(MakeParam<S>(name, "bias", 1, out)),
      activation(act) {}

template <typename S>
LstmLayer<S>::LstmLayer(std::string name, int in, int hidden)
    : kernel(MakeParam<S>(name, "kernel", in, 4 * hidden)),
      recurrent_kernel(MakeParam<S>(name, "recurrent_kernel", hidden, 4 * hidden)),
      bias(MakeParam<S>(name, "bias", 1, 4 * hidden)) {}

template <typename S>
BlstmLayer<S>::BlstmLayer(const std::string& name, int in, int hidden)
    : forward(name + ".fwd", in, hidden), backward(name + ".bwd", in, hidden) {}

template <typename S>
std::vector<Parameter<S>*> BlstmLayer<S>::Parameters() {
  auto out = forward.Parameters();
  for (auto* p : backward.Parameters()) out.push_back(p);
  return out;
}

template <typename S>
void FillOrthogonal(Matrix<S>& out, Rng& rng) {
  const Eigen::Index rows = out.rows(), cols = out.cols();
  const bool tall = rows >= cols;
  Eigen::MatrixXd a(tall ? rows : cols, tall ? cols : rows);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.Normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  if (tall) out = q.cast<S>();
  else out = q.transpose().cast<S>();
}

template <typename S>
void InitDense(DenseLayer<S>& layer, Rng& rng) {
  GlorotUniform(layer.kernel.value, rng);
  layer.bias.value.setZero();
}

template <typename S>
void InitLstm(LstmLayer<S>& layer, Rng& rng) {
  GlorotUniform(layer.kernel.value, rng);
  FillOrthogonal(layer.recurrent_kernel.value, rng);
  const Eigen::Index h = layer.Hidden();
  layer.bias.value.setZero();
  layer.bias.value.middleCols(h, h).setOnes();
}

template <typename S>
Matrix<S> Activate(const Matrix<S>& z, Activation act) {
  switch (act) {
    case Activation::kLinear: return z;
    case Activation::kRelu: return z.cwiseMax(S(0));
    case Activation::kSigmoid: return z.unaryExpr([](S v) { return Sigmoid(v); });
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kSoftmax: {
      Matrix<S> out(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const S peak = z.row(r).maxCoeff();
        out.row(r) = (z.row(r).array() - peak).exp().matrix();
        out.row(r) /= out.row(r).sum();
      }
      return out;
    }
  }
  return z;
}

template <typename S>
Var Dense(Tape<S>& tape, Var x, DenseLayer<S>& layer) {
  const Matrix<S>& in = tape.Value(x);
  if (in.cols() != layer.In())
    throw std::invalid_argument("dense input width " + std::to_string(in.cols()) +
                                " != " + std::to_string(layer.In()));
  tape.Track(layer.kernel);
  tape.Track(layer.bias);
  Matrix<S> z = in * layer.kernel.value;
  z.rowwise() += layer.bias.value.row(0);
  Matrix<S> y = Activate(z, layer.activation);
  DenseLayer<S>* l = &layer;
  return tape.Record(std::move(y), tape.GetLayout(x), [x, l](Tape<S>& t, Var self) {
    const Matrix<S>& dy = t.Grad(self);
    const Matrix<S>& y = t.Value(self);
    Matrix<S> dz;
    switch (l->activation) {
      case Activation::kLinear: dz = dy; break;
      case Activation::kRelu:
        dz = (y.array() > S(0)).select(dy, Matrix<S>::Zero(dy.rows(), dy.cols()));
        break;
      case Activation::kSigmoid: dz = dy.cwiseProduct(y.cwiseProduct((S(1) - y.array()).matrix())); break;
      case Activation::kTanh: dz = dy.cwiseProduct((S(1) - y.array().square()).matrix()); break;
      case Activation::kSoftmax: {
        const Eigen::Matrix<S, Eigen::Dynamic, 1> dot = dy.cwiseProduct(y).rowwise().sum();
        dz = y.cwiseProduct((dy.colwise() - dot));
        break;
      }
    }
    const Matrix<S>& in = t.Value(x);
    if (!l->kernel.frozen) l->kernel.grad.noalias() += in.transpose() * dz;
    if (!l->bias.frozen) l->bias.grad += dz.colwise().sum();
    t.Grad(x).noalias() += dz * l->kernel.value.transpose();
  });
}

namespace {

// Activations saved by the LSTM forward pass.
template <typename S>
struct LstmCache {
  Matrix<S> gates;        // rows x 4H: i, f, g, o after nonlinearity
  Matrix<S> cells;        // rows x H
  Matrix<S> cells_tanh;   // rows x H
  Matrix<S> prev_hidden;  // rows x H: h fed into the step
  Matrix<S> prev_cells;   // rows x H
};

}  // namespace

template <typename S>
Var Lstm(Tape<S>& tape, Var x, LstmLayer<S>& layer, bool reverse) {
  const Matrix<S>& in = tape.Value(x);
  const Layout layout = tape.GetLayout(x);
  if (in.cols() != layer.In())
    throw std::invalid_argument("LSTM input width " + std::to_string(in.cols()) +
                                " != " + std::to_string(layer.In()));
  if (layout.steps < 1) throw std::invalid_argument("LSTM needs at least one step");
  tape.Track(layer.kernel);
  tape.Track(layer.recurrent_kernel);
  tape.Track(layer.bias);

  const Eigen::Index steps = layout.steps, batch = layout.batch, h = layer.Hidden();
  auto cache = std::make_shared<LstmCache<S>>();
  cache->gates = in * layer.kernel.value;
  cache->gates.rowwise() += layer.bias.value.row(0);
  cache->cells.resize(in.rows(), h);
  cache->cells_tanh.resize(in.rows(), h);
  cache->prev_hidden.setZero(in.rows(), h);
  cache->prev_cells.setZero(in.rows(), h);
  Matrix<S> out(in.rows(), h);

  Matrix<S> h_prev = Matrix<S>::Zero(batch, h);
  Matrix<S> c_prev = Matrix<S>::Zero(batch, h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const Eigen::Index row = t * batch;
    auto g = cache->gates.middleRows(row, batch);
    g.noalias() += h_prev * layer.recurrent_kernel.value;
    g.leftCols(2 * h) = g.leftCols(2 * h).unaryExpr([](S v) { return Sigmoid(v); });
    g.middleCols(2 * h, h) = g.middleCols(2 * h, h).array().tanh().matrix();
    g.rightCols(h) = g.rightCols(h).unaryExpr([](S v) { return Sigmoid(v); });
    cache->prev_hidden.middleRows(row, batch) = h_prev;
    cache->prev_cells.middleRows(row, batch) = c_prev;
    auto c = cache->cells.middleRows(row, batch);
    c = g.middleCols(h, h).cwiseProduct(c_prev) +
        g.leftCols(h).cwiseProduct(g.middleCols(2 * h, h));
    auto tc = cache->cells_tanh.middleRows(row, batch);
    tc = c.array().tanh().matrix();
    out.middleRows(row, batch) = g.rightCols(h).cwiseProduct(tc);
    h_prev = out.middleRows(row, batch);
    c_prev = c;
  }

  LstmLayer<S>* l = &layer;
  return tape.Record(std::move(out), layout, [x, l, cache, reverse](Tape<S>& t, Var self) {
    const Matrix<S>& dout = t.Grad(self);
    const Layout layout = t.GetLayout(self);
    const Eigen::Index steps = layout.steps, batch = layout.batch, h = l->Hidden();
    Matrix<S> dgates(dout.rows(), 4 * h);
    Matrix<S> dh_next = Matrix<S>::Zero(batch, h);
    Matrix<S> dc_next = Matrix<S>::Zero(batch, h);
    Matrix<S> dh(batch, h), dc(batch, h);
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
      const Eigen::Index tt = reverse ? steps - 1 - s : s;
      const Eigen::Index row = tt * batch;
      const auto g = cache->gates.middleRows(row, batch);
      const auto i_gate = g.leftCols(h).array();
      const auto f_gate = g.middleCols(h, h).array();
      const auto c_gate = g.middleCols(2 * h, h).array();
      const auto o_gate = g.rightCols(h).array();
      const auto tc = cache->cells_tanh.middleRows(row, batch).array();
      dh = dout.middleRows(row, batch) + dh_next;
      dc = (dh.array() * o_gate * (S(1) - tc.square())).matrix() + dc_next;
      auto dg = dgates.middleRows(row, batch);
      dg.leftCols(h) = (dc.array() * c_gate * i_gate * (S(1) - i_gate)).matrix();
      dg.middleCols(h, h) = (dc.array() * cache->prev_cells.middleRows(row, batch).array() *
                             f_gate * (S(1) - f_gate)).matrix();
      dg.middleCols(2 * h, h) = (dc.array() * i_gate * (S(1) - c_gate.square())).matrix();
      dg.rightCols(h) = (dh.array() * tc * o_gate * (S(1) - o_gate)).matrix();
      dc_next = (dc.array() * f_gate).matrix();
      dh_next.noalias() = dg * l->recurrent_kernel.value.transpose();
    }
    const Matrix<S>& in = t.Value(x);
    if (!l->kernel.frozen) l->kernel.grad.noalias() += in.transpose() * dgates;
    if (!l->recurrent_kernel.frozen)
      l->recurrent_kernel.grad.noalias() += cache->prev_hidden.transpose() * dgates;
    if (!l->bias.frozen) l->bias.grad += dgates.colwise().sum();
    t.Grad(x).noalias() += dgates * l->kernel.value.transpose();
  });
}

template <typename S>
Var Concat(Tape<S>& tape, Var a, Var b) {
  const Layout la = tape.GetLayout(a), lb = tape.GetLayout(b);
  if (!(la == lb)) throw std::invalid_argument("concat: sequence layouts differ");
  const Matrix<S>& va = tape.Value(a);
  const Matrix<S>& vb = tape.Value(b);
  Matrix<S> out(va.rows(), va.cols() + vb.cols());
  out.leftCols(va.cols()) = va;
  out.rightCols(vb.cols()) = vb;
  const Eigen::Index wa = va.cols(), wb = vb.cols();
  return tape.Record(std::move(out), la, [a, b, wa, wb](Tape<S>& t, Var self) {
    const Matrix<S>& d = t.Grad(self);
    if (wa > 0) t.Grad(a) += d.leftCols(wa);
    if (wb > 0) t.Grad(b) += d.rightCols(wb);
  });
}

template <typename S>
Var Blstm(Tape<S>& tape, Var x, BlstmLayer<S>& layer) {
  const Var fwd = Lstm(tape, x, layer.forward, false);
  const Var bwd = Lstm(tape, x, layer.backward, true);
  return Concat(tape, fwd, bwd);
}

template <typename S>
Var WeightedSum(Tape<S>& tape, Var a, Var b, S weight) {
  const Matrix<S>& va = tape.Value(a);
  const Matrix<S>& vb = tape.Value(b);
  if (va.size() != 1 || vb.size() != 1) throw std::invalid_argument("weighted sum of scalars only");
  Matrix<S> out(1, 1);
  out(0, 0) = va(0, 0) + weight * vb(0, 0);
  return tape.Record(std::move(out), Layout{1, 1}, [a, b, weight](Tape<S>& t, Var self) {
    const S g = t.Grad(self)(0, 0);
    t.Grad(a)(0, 0) += g;
    t.Grad(b)(0, 0) += weight * g;
  });
}

#define AVI_INSTANTIATE_LAYERS(S)                                        \
  template struct DenseLayer<S>;                                         \
  template struct LstmLayer<S>;                                          \
  template struct BlstmLayer<S>;                                         \
  template void InitDense<S>(DenseLayer<S>&, Rng&);                      \
  template void InitLstm<S>(LstmLayer<S>&, Rng&);                        \
  template void FillOrthogonal<S>(Matrix<S>&, Rng&);                     \
  template Matrix<S> Activate<S>(const Matrix<S>&, Activation);          \
  template Var Dense<S>(Tape<S>&, Var, DenseLayer<S>&);                  \
  template Var Lstm<S>(Tape<S>&, Var, LstmLayer<S>&, bool);              \
  template Var Blstm<S>(Tape<S>&, Var, BlstmLayer<S>&);                  \
  template Var Concat<S>(Tape<S>&, Var, Var);                            \
  template Var WeightedSum<S>(Tape<S>&, Var, Var, S);

AVI_INSTANTIATE_LAYERS(float)
AVI_INSTANTIATE_LAYERS(double)

}  // namespace avi::nn
