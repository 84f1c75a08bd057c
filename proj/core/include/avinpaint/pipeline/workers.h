// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>

namespace avi::pipeline {

// Runs body(0..n-1) on up to `workers` threads. Items are claimed in index
// order; the first exception is rethrown after all threads finish.
void ParallelFor(int n, int workers, const std::function<void(int)>& body);

}  // namespace avi::pipeline
