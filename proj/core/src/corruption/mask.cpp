// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/corruption/mask.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "avinpaint/common/random.h"

namespace avi::corruption {

void MaskSpec::Validate() const {
  if (!(hop_ms > 0.0)) throw std::invalid_argument("hop_ms must be positive");
  if (!(min_gap_ms > 0.0)) throw std::invalid_argument("min_gap_ms must be positive");
  if (!(std_ms >= 0.0)) throw std::invalid_argument("std_ms must be non-negative");
  if (!(min_total_ms <= mean_ms && mean_ms <= max_total_ms))
    throw std::invalid_argument("need min_total_ms <= mean_ms <= max_total_ms");
  if (min_gaps < 1 || max_gaps < min_gaps)
    throw std::invalid_argument("need 1 <= min_gaps <= max_gaps");
  if (MinTotalFrames() < min_gaps * MinGapFrames())
    throw std::invalid_argument("minimum total too short for min_gaps gaps");
}

int MaskSpec::MinGapFrames() const {
  // Tolerate representation error, e.g. 40 ms / 20 ms.
  return static_cast<int>(std::ceil(min_gap_ms / hop_ms - 1e-9));
}

int MaskSpec::MinTotalFrames() const {
  return static_cast<int>(std::ceil(min_total_ms / hop_ms - 1e-9));
}

int MaskSpec::MaxTotalFrames() const {
  return static_cast<int>(std::floor(max_total_ms / hop_ms + 1e-9));
}

nlohmann::json MaskSpec::ToJson() const {
  return {{"mean_ms", mean_ms},           {"std_ms", std_ms},
          {"min_total_ms", min_total_ms}, {"max_total_ms", max_total_ms},
          {"min_gaps", min_gaps},         {"max_gaps", max_gaps},
          {"min_gap_ms", min_gap_ms},     {"hop_ms", hop_ms}};
}

MaskSpec MaskSpec::FromJson(const nlohmann::json& j) {
  MaskSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "mean_ms") s.mean_ms = value.get<double>();
    else if (key == "std_ms") s.std_ms = value.get<double>();
    else if (key == "min_total_ms") s.min_total_ms = value.get<double>();
    else if (key == "max_total_ms") s.max_total_ms = value.get<double>();
    else if (key == "min_gaps") s.min_gaps = value.get<int>();
    else if (key == "max_gaps") s.max_gaps = value.get<int>();
    else if (key == "min_gap_ms") s.min_gap_ms = value.get<double>();
    else if (key == "hop_ms") s.hop_ms = value.get<double>();
    else throw std::invalid_argument("unknown mask key: " + key);
  }
  s.Validate();
  return s;
}

Mask Mask::AllIntact(int frames, double hop_ms) {
  if (frames < 0) throw std::invalid_argument("negative frame count");
  Mask m;
  m.intact_.assign(static_cast<std::size_t>(frames), 1);
  m.hop_ms_ = hop_ms;
  return m;
}

Mask Mask::FromGaps(int frames, std::vector<Gap> gaps, double hop_ms) {
  Mask m = AllIntact(frames, hop_ms);
  std::sort(gaps.begin(), gaps.end(),
            [](const Gap& a, const Gap& b) { return a.start < b.start; });
  int previous_end = -1;
  for (const Gap& g : gaps) {
    if (g.length < 1 || g.start < 0 || g.start + g.length > frames)
      throw std::invalid_argument("gap outside the spectrogram");
    if (previous_end >= 0 && g.start <= previous_end)
      throw std::invalid_argument("gaps overlap or touch");
    for (int t = g.start; t < g.start + g.length; ++t) m.intact_[t] = 0;
    previous_end = g.start + g.length;
  }
  m.gaps_ = std::move(gaps);
  return m;
}

int Mask::MaskedFrames() const {
  return static_cast<int>(std::count(intact_.begin(), intact_.end(), 0));
}

nlohmann::json Mask::ToJson() const {
  nlohmann::json gaps = nlohmann::json::array();
  for (const Gap& g : gaps_) gaps.push_back({g.start, g.length});
  return {{"T", Frames()}, {"gaps", gaps}, {"hop_ms", hop_ms_}};
}

Mask Mask::FromJson(const nlohmann::json& j) {
  std::vector<Gap> gaps;
  for (const auto& g : j.at("gaps")) gaps.push_back({g.at(0).get<int>(), g.at(1).get<int>()});
  return FromGaps(j.at("T").get<int>(), std::move(gaps), j.value("hop_ms", 20.0));
}

Mask SampleMask(std::uint64_t seed, int frames, const MaskSpec& spec) {
  spec.Validate();
  if (frames < spec.RequiredFrames())
    throw std::invalid_argument("spectrogram of " + std::to_string(frames) +
                                " frames cannot host the mask spec (needs " +
                                std::to_string(spec.RequiredFrames()) + ")");
  Rng rng(seed);
  const int min_gap = spec.MinGapFrames();

  const double draw = rng.Normal(spec.MeanFrames(), spec.StdFrames());
  const int total = static_cast<int>(std::lround(std::clamp(
      draw, static_cast<double>(spec.MinTotalFrames()),
      static_cast<double>(spec.MaxTotalFrames()))));

  const int max_count = std::min(spec.max_gaps, total / min_gap);
  const int count = static_cast<int>(rng.UniformInt(spec.min_gaps, max_count));

  const int surplus = total - count * min_gap;
  std::vector<int> cuts(static_cast<std::size_t>(count - 1));
  for (int& c : cuts) c = static_cast<int>(rng.UniformInt(0, surplus));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> lengths(static_cast<std::size_t>(count));
  int previous = 0;
  for (int i = 0; i < count; ++i) {
    const int cut = i + 1 < count ? cuts[i] : surplus;
    lengths[i] = min_gap + cut - previous;
    previous = cut;
  }

  // Stars and bars: the intact frames not used as separators are spread over
  // the count+1 slots around the gaps. Choosing `count` distinct markers out
  // of slack+count positions enumerates every placement exactly once.
  const int slack = frames - total - (count - 1);
  std::vector<int> pool(static_cast<std::size_t>(slack + count));
  for (int i = 0; i < slack + count; ++i) pool[i] = i;
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<int>(rng.UniformInt(i, slack + count - 1));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> markers(pool.begin(), pool.begin() + count);
  std::sort(markers.begin(), markers.end());

  std::vector<Gap> gaps;
  int cursor = 0;
  int used_slack = 0;
  for (int i = 0; i < count; ++i) {
    const int leading = markers[i] - i;  // slack consumed before gap i
    cursor += leading - used_slack;
    used_slack = leading;
    gaps.push_back({cursor, lengths[i]});
    cursor += lengths[i] + 1;
  }
  return Mask::FromGaps(frames, std::move(gaps), spec.hop_ms);
}

std::vector<std::string> AuditMask(const Mask& mask, const MaskSpec& spec) {
  std::vector<std::string> problems;
  const auto& gaps = mask.Gaps();
  const int count = static_cast<int>(gaps.size());
  if (count < spec.min_gaps || count > spec.max_gaps)
    problems.push_back("gap count " + std::to_string(count) + " out of range");
  const int total = mask.MaskedFrames();
  if (total < spec.MinTotalFrames() || total > spec.MaxTotalFrames())
    problems.push_back("total " + std::to_string(total) + " frames out of range");
  int covered = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    covered += gaps[i].length;
    if (gaps[i].length < spec.MinGapFrames())
      problems.push_back("gap " + std::to_string(i) + " shorter than minimum");
    if (gaps[i].start < 0 || gaps[i].start + gaps[i].length > mask.Frames())
      problems.push_back("gap " + std::to_string(i) + " outside spectrogram");
    if (i > 0 && gaps[i].start <= gaps[i - 1].start + gaps[i - 1].length)
      problems.push_back("gaps " + std::to_string(i - 1) + " and " +
                         std::to_string(i) + " not separated");
  }
  if (covered != total) problems.push_back("frame mask inconsistent with gaps");
  return problems;
}

MaskedSpectrogram ApplyMask(const RowMatrix& x, const Mask& mask) {
  if (x.rows() != mask.Frames())
    throw std::invalid_argument("mask length does not match spectrogram");
  MaskedSpectrogram out{x, mask};
  for (int t = 0; t < mask.Frames(); ++t)
    if (!mask.IsIntact(t)) out.values.row(t).setZero();
  return out;
}

MaskedSpectrogram ApplyMask(const dsp::MelSpectrogram& x, const Mask& mask) {
  return ApplyMask(x.values, mask);
}

RowMatrix Composite(const RowMatrix& x, const RowMatrix& y, const Mask& mask) {
  if (x.rows() != mask.Frames() || y.rows() != x.rows() || y.cols() != x.cols())
    throw std::invalid_argument("composite shape mismatch");
  RowMatrix out = x;
  for (int t = 0; t < mask.Frames(); ++t)
    if (!mask.IsIntact(t)) out.row(t) = y.row(t).cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

dsp::MelSpectrogram Composite(const dsp::MelSpectrogram& x, const RowMatrix& y,
                              const Mask& mask) {
  dsp::MelSpectrogram out = x;
  out.values = Composite(x.values, y, mask);
  return out;
}

}  // namespace avi::corruption
