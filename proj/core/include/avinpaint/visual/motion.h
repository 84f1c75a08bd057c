// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string_view>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"

namespace avi::visual {

inline constexpr int kFaceLandmarks = 68;
// Outer and inner lip contour of the 68-point scheme: indices 48..67.
inline constexpr int kMouthFirst = 48;
inline constexpr int kMouthLandmarks = 20;

// frames x (2 * points); columns are x0, y0, x1, y1, ... in pixels.
struct LandmarkSequence {
  RowMatrix coords;
  int points = kFaceLandmarks;
  double fps = 25.0;

  int Frames() const { return static_cast<int>(coords.rows()); }
};

// Header `frame,x0,y0,...,x67,y67`, one row per video frame.
LandmarkSequence ReadLandmarkCsv(const std::filesystem::path& path, double fps = 25.0);
void WriteLandmarkCsv(const std::filesystem::path& path, const LandmarkSequence& seq);

// Keeps landmarks 48..67 in order. Throws unless the input has 68 points.
LandmarkSequence MouthSubset(const LandmarkSequence& seq);

// Row f is the flattened displacement between frames f+1 and f.
RowMatrix MotionVectors(const LandmarkSequence& seq);

enum class Interpolation { kCubicSpline, kLinear };

Interpolation ParseInterpolation(std::string_view name);
std::string_view InterpolationName(Interpolation kind);

// Resamples every column onto target_frames uniformly spaced instants that
// span the same interval as the source rows, so the first and last rows are
// preserved.
RowMatrix UpsampleTemporal(const RowMatrix& rows, int target_frames,
                           Interpolation kind = Interpolation::kCubicSpline);

// Per-dimension range, accumulated over the training split only.
class FeatureStats {
 public:
  FeatureStats() = default;
  explicit FeatureStats(int dims);

  void Accumulate(const RowMatrix& rows);
  int Dims() const { return static_cast<int>(min_.size()); }
  bool Empty() const { return count_ == 0; }
  const Eigen::VectorXd& Min() const { return min_; }
  const Eigen::VectorXd& Max() const { return max_; }

  nlohmann::json ToJson() const;
  static FeatureStats FromJson(const nlohmann::json& j);

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
  long count_ = 0;
};

// (v - min) / (max - min) clipped to [0, 1]; constant dimensions map to 0.5.
// Throws on NaN input.
RowMatrix Normalize01(const RowMatrix& rows, const FeatureStats& stats);

struct VisualConfig {
  bool mouth_only = true;
  Interpolation interpolation = Interpolation::kCubicSpline;

  int FeatureDims() const { return 2 * (mouth_only ? kMouthLandmarks : kFaceLandmarks); }
};

// Landmarks -> optional mouth subset -> frame differences -> upsampled to
// target_frames. Not yet normalized.
RowMatrix ExtractMotion(const LandmarkSequence& seq, int target_frames,
                        const VisualConfig& config);

}  // namespace avi::visual
