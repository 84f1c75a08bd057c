// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/nn/tape.h"

namespace avi::nn {

template <typename S>
Var Tape<S>::Input(Matrix<S> value, Layout layout) {
  return Record(std::move(value), layout, nullptr);
}

template <typename S>
Var Tape<S>::Record(Matrix<S> value, Layout layout, BackwardFn backward) {
  if (value.rows() != layout.Rows())
    throw std::invalid_argument("tape node rows do not match its layout");
  if (!value.allFinite()) throw NumericalError("non-finite value recorded on tape");
  nodes_.push_back(Node{std::move(value), Matrix<S>(), layout, std::move(backward)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename S>
const typename Tape<S>::Node& Tape<S>::At(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("variable is not on this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename S>
typename Tape<S>::Node& Tape<S>::At(Var v) {
  return const_cast<Node&>(static_cast<const Tape&>(*this).At(v));
}

template <typename S>
Matrix<S>& Tape<S>::Grad(Var v) {
  Node& n = At(v);
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename S>
void Tape<S>::Track(Parameter<S>& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.ZeroGrad();
  if (tracked_set_.insert(&p).second) tracked_.push_back(&p);
}

template <typename S>
void Tape<S>::Backward(Var loss) {
  Node& root = At(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1)
    throw std::invalid_argument("backward needs a scalar loss");
  Grad(loss).setOnes();
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward && n.grad.size() > 0) n.backward(*this, Var{id});
  }
  for (const Parameter<S>* p : tracked_)
    if (!p->grad.allFinite())
      throw NumericalError("non-finite gradient for parameter " + p->Name());
}

template <typename S>
void Tape<S>::Clear() {
  nodes_.clear();
  tracked_.clear();
  tracked_set_.clear();
}

template class Tape<float>;
template class Tape<double>;

}  // namespace avi::nn
