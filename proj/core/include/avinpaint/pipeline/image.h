// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "avinpaint/common/matrix.h"
#include "avinpaint/corruption/mask.h"

namespace avi::pipeline {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first

  std::uint8_t At(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Panels for input, restored and ground truth side by side, each T pixels
// wide with low frequencies at the bottom and values in [0, 1] mapped to
// black..white. A strip above each panel is dark over masked frames.
GrayImage RenderTriptych(const RowMatrix& input, const RowMatrix& restored, const RowMatrix& truth,
                         const corruption::Mask& mask);

void WritePng(const std::filesystem::path& path, const GrayImage& image);
GrayImage ReadPng(const std::filesystem::path& path);

// Layout constants shared with tests.
inline constexpr int kTriptychStrip = 4;
inline constexpr int kTriptychGap = 3;

}  // namespace avi::pipeline
