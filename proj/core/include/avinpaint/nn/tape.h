// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "avinpaint/common/matrix.h"

namespace avi::nn {

template <typename S>
using Matrix = RowMatrixT<S>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trainable array. `layer` and `role` name it inside checkpoints.
template <typename S>
struct Parameter {
  std::string layer;
  std::string role;
  Matrix<S> value;
  Matrix<S> grad;
  bool frozen = false;

  std::string Name() const { return layer + "." + role; }
  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Batched sequences are stored time-major: row t * batch + b holds step t of
// sequence b. Plain matrices use steps = rows, batch = 1.
struct Layout {
  Eigen::Index steps = 1;
  Eigen::Index batch = 1;

  Eigen::Index Rows() const { return steps * batch; }
  bool operator==(const Layout&) const = default;
};

struct Var {
  int id = -1;
  bool Valid() const { return id >= 0; }
};

// Records the forward computation. Backward replays the recorded adjoint
// rules in reverse creation order, which is a reverse topological order
// because every node only reads earlier nodes.
template <typename S>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Var Input(Matrix<S> value, Layout layout);
  Var Input(Matrix<S> value) {
    const Layout layout{value.rows(), 1};
    return Input(std::move(value), layout);
  }

  // `backward` reads Grad(self) and accumulates into its inputs' grads
  // and parameter grads. It only runs if the node received a gradient.
  Var Record(Matrix<S> value, Layout layout, BackwardFn backward);

  const Matrix<S>& Value(Var v) const { return At(v).value; }
  Layout GetLayout(Var v) const { return At(v).layout; }
  bool HasGrad(Var v) const { return At(v).grad.size() > 0; }
  // Zero-initialized on first access.
  Matrix<S>& Grad(Var v);

  void Track(Parameter<S>& p);

  // Seeds d(loss)/d(loss) = 1 and runs every adjoint once. Throws
  // std::invalid_argument if `loss` is not a 1x1 node of this tape and
  // NumericalError if any parameter gradient is not finite.
  void Backward(Var loss);

  std::size_t Size() const { return nodes_.size(); }
  void Clear();

 private:
  struct Node {
    Matrix<S> value;
    Matrix<S> grad;
    Layout layout;
    BackwardFn backward;
  };

  const Node& At(Var v) const;
  Node& At(Var v);

  std::vector<Node> nodes_;
  std::vector<Parameter<S>*> tracked_;
  std::unordered_set<const Parameter<S>*> tracked_set_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace avi::nn
