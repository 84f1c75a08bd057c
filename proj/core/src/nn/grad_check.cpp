// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/nn/grad_check.h"

#include <algorithm>
#include <cmath>

namespace avi::nn {

namespace {

double Evaluate(const LossBuilder& build) {
  Tape<double> tape;
  return tape.Value(build(tape))(0, 0);
}

}  // namespace

GradCheckReport GradCheck(const LossBuilder& build, const std::vector<Parameter<double>*>& params,
                          const GradCheckOptions& options) {
  for (auto* p : params) p->ZeroGrad();
  {
    Tape<double> tape;
    tape.Backward(build(tape));
  }

  GradCheckReport report;
  for (auto* p : params) {
    if (p->frozen) continue;
    GradCheckEntry entry;
    entry.name = p->Name();
    entry.size = static_cast<long>(p->value.size());
    const Matrix<double> analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + options.step;
      const double up = Evaluate(build);
      v = saved - options.step;
      const double down = Evaluate(build);
      v = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic.data()[i];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace avi::nn
