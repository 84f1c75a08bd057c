// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "avinpaint/nn/tape.h"

namespace avi::nn {

struct GradCheckEntry {
  std::string name;
  long size = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // frozen parameters are skipped
  double max_rel_error = 0.0;

  bool Passed(double tolerance) const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double step = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, denominator_floor), so entries
  // whose true gradient is essentially zero are judged on absolute error.
  double denominator_floor = 1e-5;
};

// Records the scalar loss on the given (empty) tape and returns it.
using LossBuilder = std::function<Var(Tape<double>&)>;

// Compares tape gradients with central differences for every element of
// every non-frozen parameter. Parameter values are restored on return.
GradCheckReport GradCheck(const LossBuilder& build, const std::vector<Parameter<double>*>& params,
                          const GradCheckOptions& options = {});

}  // namespace avi::nn
