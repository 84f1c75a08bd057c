// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"
#include "avinpaint/dsp/mel.h"

namespace avi::corruption {

// Random gap process. Durations are in milliseconds and converted to frames
// with the hop; the minimum gap rounds up (36 ms -> 2 frames at 20 ms).
struct MaskSpec {
  double mean_ms = 900.0;
  double std_ms = 300.0;
  double min_total_ms = 300.0;
  double max_total_ms = 1500.0;
  int min_gaps = 1;
  int max_gaps = 8;
  double min_gap_ms = 36.0;
  double hop_ms = 20.0;

  void Validate() const;

  int MinGapFrames() const;
  int MinTotalFrames() const;
  int MaxTotalFrames() const;
  double MeanFrames() const { return mean_ms / hop_ms; }
  double StdFrames() const { return std_ms / hop_ms; }
  // Smallest spectrogram length that hosts every legal draw, separators
  // included.
  int RequiredFrames() const { return MaxTotalFrames() + max_gaps - 1; }

  nlohmann::json ToJson() const;
  static MaskSpec FromJson(const nlohmann::json& j);
};

struct Gap {
  int start = 0;
  int length = 0;

  bool operator==(const Gap&) const = default;
};

// intact[t] == 1 keeps frame t, 0 marks it missing. Gaps are sorted, disjoint
// and consistent with `intact`.
class Mask {
 public:
  Mask() = default;
  static Mask AllIntact(int frames, double hop_ms = 20.0);
  // Throws if gaps overlap, touch, or leave [0, frames).
  static Mask FromGaps(int frames, std::vector<Gap> gaps, double hop_ms = 20.0);

  int Frames() const { return static_cast<int>(intact_.size()); }
  const std::vector<std::uint8_t>& Intact() const { return intact_; }
  bool IsIntact(int t) const { return intact_[static_cast<std::size_t>(t)] != 0; }
  const std::vector<Gap>& Gaps() const { return gaps_; }
  double HopMs() const { return hop_ms_; }
  int MaskedFrames() const;

  // {"T": .., "gaps": [[start, len], ...], "hop_ms": ..}
  nlohmann::json ToJson() const;
  static Mask FromJson(const nlohmann::json& j);

  bool operator==(const Mask&) const = default;

 private:
  std::vector<std::uint8_t> intact_;
  std::vector<Gap> gaps_;
  double hop_ms_ = 20.0;
};

// Total masked length ~ Normal(mean, std) in frames, clipped to the allowed
// range and rounded; the gap count is uniform over the feasible range; the
// total is split by sorted uniform cuts over the surplus above the per-gap
// minimum; positions are uniform over all placements that keep at least one
// intact frame between gaps. Pure function of its arguments.
Mask SampleMask(std::uint64_t seed, int frames, const MaskSpec& spec);

// Empty when the mask satisfies every hard constraint of `spec`.
std::vector<std::string> AuditMask(const Mask& mask, const MaskSpec& spec);

struct MaskedSpectrogram {
  RowMatrix values;
  Mask mask;
};

// a_t = m_t * x_t.
MaskedSpectrogram ApplyMask(const RowMatrix& x, const Mask& mask);
MaskedSpectrogram ApplyMask(const dsp::MelSpectrogram& x, const Mask& mask);

// o_t = m_t * x_t + (1 - m_t) * clip(y_t, 0, 1). Intact rows are copied
// bit-for-bit from x.
RowMatrix Composite(const RowMatrix& x, const RowMatrix& y, const Mask& mask);
dsp::MelSpectrogram Composite(const dsp::MelSpectrogram& x, const RowMatrix& y,
                              const Mask& mask);

}  // namespace avi::corruption
