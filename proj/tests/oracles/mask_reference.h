// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Reference gap sampler written without the library's sampling code: its own
// generator, polar-method normals, and placement by shuffling a token string
// of intact frames and gaps. Only its distribution has to match SampleMask.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace avi::oracle {

struct ReferenceGap {
  int start;
  int length;
};

class ReferenceMaskSampler {
 public:
  // All quantities in frames.
  ReferenceMaskSampler(std::uint64_t seed, int frames, double mean, double stddev,
                       int min_total, int max_total, int max_gaps, int min_gap)
      : engine_(seed), frames_(frames), mean_(mean), stddev_(stddev),
        min_total_(min_total), max_total_(max_total), max_gaps_(max_gaps),
        min_gap_(min_gap) {}

  std::vector<ReferenceGap> Draw() {
    double z = PolarNormal();
    double d = mean_ + stddev_ * z;
    if (d < min_total_) d = min_total_;
    if (d > max_total_) d = max_total_;
    const int total = static_cast<int>(std::lround(d));

    const int k_max = std::min(max_gaps_, total / min_gap_);
    const int k = std::uniform_int_distribution<int>(1, k_max)(engine_);

    const int surplus = total - k * min_gap_;
    std::vector<int> cuts;
    for (int i = 0; i + 1 < k; ++i)
      cuts.push_back(std::uniform_int_distribution<int>(0, surplus)(engine_));
    std::sort(cuts.begin(), cuts.end());
    cuts.insert(cuts.begin(), 0);
    cuts.push_back(surplus);
    std::vector<int> lengths;
    for (int i = 0; i < k; ++i) lengths.push_back(min_gap_ + cuts[i + 1] - cuts[i]);

    // Tokens: 0 = free intact frame, 1 = next gap. Separators are implicit.
    const int free = frames_ - total - (k - 1);
    std::vector<int> tokens(static_cast<std::size_t>(free), 0);
    tokens.insert(tokens.end(), static_cast<std::size_t>(k), 1);
    std::shuffle(tokens.begin(), tokens.end(), engine_);
    std::vector<ReferenceGap> gaps;
    int position = 0;
    for (int token : tokens) {
      if (token == 0) {
        ++position;
        continue;
      }
      if (!gaps.empty()) ++position;  // separator after the previous gap
      const int len = lengths[gaps.size()];
      gaps.push_back({position, len});
      position += len;
    }
    return gaps;
  }

 private:
  double PolarNormal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double a, b, s;
    do {
      a = u(engine_);
      b = u(engine_);
      s = a * a + b * b;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = b * f;
    has_spare_ = true;
    return a * f;
  }

  std::mt19937_64 engine_;
  int frames_;
  double mean_, stddev_;
  int min_total_, max_total_, max_gaps_, min_gap_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Moments shared by the library sampler check and the reference.
struct MaskMoments {
  double total_mean = 0, total_std = 0, count_mean = 0, gap_len_mean = 0,
         start_mean = 0;
};

template <typename GapList>
MaskMoments ComputeMoments(const std::vector<GapList>& draws) {
  MaskMoments m;
  double sum = 0, sum_sq = 0, count = 0, gap_len = 0, gaps = 0, start = 0;
  for (const auto& g : draws) {
    int total = 0;
    for (const auto& gap : g) {
      total += gap.length;
      gap_len += gap.length;
      start += gap.start;
    }
    sum += total;
    sum_sq += static_cast<double>(total) * total;
    count += static_cast<double>(g.size());
    gaps += static_cast<double>(g.size());
  }
  const double n = static_cast<double>(draws.size());
  m.total_mean = sum / n;
  m.total_std = std::sqrt(std::max(0.0, sum_sq / n - m.total_mean * m.total_mean) * n / (n - 1));
  m.count_mean = count / n;
  m.gap_len_mean = gap_len / gaps;
  m.start_mean = start / gaps;
  return m;
}

}  // namespace avi::oracle
