// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/visual/motion.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace avi::visual {

LandmarkSequence ReadLandmarkCsv(const std::filesystem::path& path, double fps) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto columns = std::count(line.begin(), line.end(), ',');
  if (line.rfind("frame", 0) != 0 || columns % 2 != 0 || columns == 0)
    throw std::runtime_error(path.string() + ": expected header frame,x0,y0,...");
  const int points = static_cast<int>(columns / 2);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    std::getline(ss, cell, ',');  // frame index
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != 2 * points)
      throw std::runtime_error(path.string() + ": ragged landmark row");
    for (double v : row)
      if (!std::isfinite(v)) throw std::runtime_error(path.string() + ": non-finite landmark");
    rows.push_back(std::move(row));
  }
  LandmarkSequence seq;
  seq.points = points;
  seq.fps = fps;
  seq.coords.resize(static_cast<Eigen::Index>(rows.size()), 2 * points);
  for (std::size_t f = 0; f < rows.size(); ++f)
    for (int c = 0; c < 2 * points; ++c) seq.coords(static_cast<Eigen::Index>(f), c) = rows[f][c];
  return seq;
}

void WriteLandmarkCsv(const std::filesystem::path& path, const LandmarkSequence& seq) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame";
  for (int p = 0; p < seq.points; ++p) out << ",x" << p << ",y" << p;
  out << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (int f = 0; f < seq.Frames(); ++f) {
    out << f;
    for (Eigen::Index c = 0; c < seq.coords.cols(); ++c) out << ',' << seq.coords(f, c);
    out << '\n';
  }
}

LandmarkSequence MouthSubset(const LandmarkSequence& seq) {
  if (seq.points != kFaceLandmarks || seq.coords.cols() != 2 * kFaceLandmarks)
    throw std::invalid_argument("mouth subset needs 68 landmarks per frame");
  LandmarkSequence out;
  out.points = kMouthLandmarks;
  out.fps = seq.fps;
  out.coords = seq.coords.middleCols(2 * kMouthFirst, 2 * kMouthLandmarks);
  return out;
}

RowMatrix MotionVectors(const LandmarkSequence& seq) {
  if (seq.Frames() < 2)
    throw std::invalid_argument("motion vectors need at least two frames");
  const Eigen::Index n = seq.coords.rows();
  return seq.coords.bottomRows(n - 1) - seq.coords.topRows(n - 1);
}

Interpolation ParseInterpolation(std::string_view name) {
  if (name == "cubic") return Interpolation::kCubicSpline;
  if (name == "linear") return Interpolation::kLinear;
  throw std::invalid_argument("unknown interpolation: " + std::string(name));
}

std::string_view InterpolationName(Interpolation kind) {
  return kind == Interpolation::kLinear ? "linear" : "cubic";
}

RowMatrix UpsampleTemporal(const RowMatrix& rows, int target_frames,
                           Interpolation kind) {
  if (target_frames < 2) throw std::invalid_argument("target length must be >= 2");
  const auto source = static_cast<int>(rows.rows());
  if (source < 2) throw std::invalid_argument("need at least two source rows");
  if (source == target_frames) return rows;

  // Target instants in units of source rows.
  std::vector<double> at(static_cast<std::size_t>(target_frames));
  const double scale = static_cast<double>(source - 1) / (target_frames - 1);
  for (int j = 0; j < target_frames; ++j)
    at[j] = std::min(j * scale, static_cast<double>(source - 1));

  RowMatrix out(target_frames, rows.cols());
  std::vector<double> column(static_cast<std::size_t>(source));
  for (Eigen::Index d = 0; d < rows.cols(); ++d) {
    for (int i = 0; i < source; ++i) column[i] = rows(i, d);
    if (kind == Interpolation::kLinear || source < 3) {
      for (int j = 0; j < target_frames; ++j) {
        const int i = std::min(static_cast<int>(at[j]), source - 2);
        const double frac = at[j] - i;
        out(j, d) = column[i] + frac * (column[i + 1] - column[i]);
      }
      continue;
    }
    // Short inputs need explicit end slopes; one-sided differences also keep
    // straight lines exact.
    const double left = column[1] - column[0];
    const double right = column[source - 1] - column[source - 2];
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(
        column.begin(), column.end(), 0.0, 1.0, left, right);
    for (int j = 0; j < target_frames; ++j) out(j, d) = spline(at[j]);
    out(0, d) = column.front();
    out(target_frames - 1, d) = column.back();
  }
  return out;
}

FeatureStats::FeatureStats(int dims)
    : min_(Eigen::VectorXd::Constant(dims, std::numeric_limits<double>::infinity())),
      max_(Eigen::VectorXd::Constant(dims, -std::numeric_limits<double>::infinity())) {}

void FeatureStats::Accumulate(const RowMatrix& rows) {
  if (min_.size() == 0) *this = FeatureStats(static_cast<int>(rows.cols()));
  if (rows.cols() != min_.size()) throw std::invalid_argument("feature width mismatch");
  if (rows.rows() == 0) return;
  min_ = min_.cwiseMin(rows.colwise().minCoeff().transpose());
  max_ = max_.cwiseMax(rows.colwise().maxCoeff().transpose());
  count_ += rows.rows();
}

nlohmann::json FeatureStats::ToJson() const {
  return {{"min", std::vector<double>(min_.data(), min_.data() + min_.size())},
          {"max", std::vector<double>(max_.data(), max_.data() + max_.size())},
          {"rows", count_}};
}

FeatureStats FeatureStats::FromJson(const nlohmann::json& j) {
  const auto lo = j.at("min").get<std::vector<double>>();
  const auto hi = j.at("max").get<std::vector<double>>();
  if (lo.size() != hi.size()) throw std::invalid_argument("stats min/max length mismatch");
  FeatureStats s(static_cast<int>(lo.size()));
  s.min_ = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  s.max_ = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  s.count_ = j.value("rows", 1L);
  return s;
}

RowMatrix Normalize01(const RowMatrix& rows, const FeatureStats& stats) {
  if (rows.cols() != stats.Dims()) throw std::invalid_argument("feature width mismatch");
  if (rows.hasNaN()) throw std::invalid_argument("NaN in visual features");
  RowMatrix out(rows.rows(), rows.cols());
  for (Eigen::Index d = 0; d < rows.cols(); ++d) {
    const double lo = stats.Min()(d), span = stats.Max()(d) - lo;
    for (Eigen::Index t = 0; t < rows.rows(); ++t)
      out(t, d) = span > 0.0 ? std::clamp((rows(t, d) - lo) / span, 0.0, 1.0) : 0.5;
  }
  return out;
}

RowMatrix ExtractMotion(const LandmarkSequence& seq, int target_frames,
                        const VisualConfig& config) {
  const LandmarkSequence used = config.mouth_only ? MouthSubset(seq) : seq;
  return UpsampleTemporal(MotionVectors(used), target_frames, config.interpolation);
}

}  // namespace avi::visual
