// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>

#include <Eigen/Core>

namespace avi {

// Frame-major storage: row t holds time step t.
template <typename Scalar>
using RowMatrixT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrix = RowMatrixT<double>;
using ComplexRowMatrix = RowMatrixT<std::complex<double>>;

}  // namespace avi
