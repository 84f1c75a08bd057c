// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "avinpaint/common/random.h"
#include "avinpaint/corruption/mask.h"
#include "oracles/mask_reference.h"

namespace avi::corruption {
namespace {

RowMatrix RandomGrid(std::uint64_t seed, int rows, int cols) {
  Rng rng(seed);
  RowMatrix x(rows, cols);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.Uniform();
  return x;
}

TEST(MaskSpec, FrameConversions) {
  const MaskSpec spec;
  EXPECT_EQ(spec.MinGapFrames(), 2);
  EXPECT_EQ(spec.MinTotalFrames(), 15);
  EXPECT_EQ(spec.MaxTotalFrames(), 75);
  EXPECT_DOUBLE_EQ(spec.MeanFrames(), 45.0);
  EXPECT_DOUBLE_EQ(spec.StdFrames(), 15.0);
  EXPECT_LE(spec.RequiredFrames(), 149);
}

TEST(MaskSpec, ValidationAndJson) {
  MaskSpec bad;
  bad.mean_ms = 2000;
  EXPECT_ANY_THROW(bad.Validate());
  bad = MaskSpec{};
  bad.min_gaps = 0;
  EXPECT_ANY_THROW(bad.Validate());
  bad = MaskSpec{};
  bad.min_gap_ms = 0;
  EXPECT_ANY_THROW(bad.Validate());
  MaskSpec spec;
  spec.max_gaps = 5;
  const MaskSpec back = MaskSpec::FromJson(spec.ToJson());
  EXPECT_EQ(back.max_gaps, 5);
  EXPECT_EQ(back.ToJson(), spec.ToJson());
}

TEST(SampleMask, TenThousandDrawsSatisfyConstraints) {
  const MaskSpec spec;
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Mask m = SampleMask(DeriveSeed(17, std::to_string(seed)), 149, spec);
    const auto problems = AuditMask(m, spec);
    violations += problems.empty() ? 0 : 1;
    int total = 0;
    int prev_end = -2;
    for (const Gap& g : m.Gaps()) {
      EXPECT_GE(g.length, 2);
      EXPECT_GE(g.start, prev_end + 1);  // at least one intact frame between
      prev_end = g.start + g.length;
      total += g.length;
    }
    EXPECT_EQ(total, m.MaskedFrames());
    ASSERT_GE(total, 15);
    ASSERT_LE(total, 75);
    ASSERT_GE(m.Gaps().size(), 1u);
    ASSERT_LE(m.Gaps().size(), 8u);
  }
  EXPECT_EQ(violations, 0);
}

TEST(SampleMask, DegenerateSpecGivesSingleFixedGap) {
  MaskSpec spec;
  spec.min_total_ms = spec.max_total_ms = spec.mean_ms = 300;
  spec.max_gaps = 1;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mask m = SampleMask(seed, 149, spec);
    ASSERT_EQ(m.Gaps().size(), 1u);
    EXPECT_EQ(m.Gaps()[0].length, 15);
  }
}

TEST(SampleMask, PureFunctionOfSeed) {
  const MaskSpec spec;
  EXPECT_EQ(SampleMask(42, 149, spec), SampleMask(42, 149, spec));
  int differing = 0;
  for (std::uint64_t s = 0; s < 20; ++s)
    differing += SampleMask(s, 149, spec) == SampleMask(s + 1000, 149, spec) ? 0 : 1;
  EXPECT_GT(differing, 15);
}

TEST(SampleMask, RejectsShortSpectrogram) {
  EXPECT_ANY_THROW(SampleMask(1, 50, MaskSpec{}));
}

TEST(SampleMask, MomentsMatchReferenceSampler) {
  const MaskSpec spec;
  std::vector<std::vector<Gap>> ours;
  for (std::uint64_t s = 0; s < 10000; ++s) ours.push_back(SampleMask(DeriveSeed(5, std::to_string(s)), 149, spec).Gaps());
  oracle::ReferenceMaskSampler ref(2024, 149, 45, 15, 15, 75, 8, 2);
  std::vector<std::vector<oracle::ReferenceGap>> theirs;
  for (int i = 0; i < 100000; ++i) theirs.push_back(ref.Draw());
  const auto a = oracle::ComputeMoments(ours);
  const auto b = oracle::ComputeMoments(theirs);
  auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
  EXPECT_LT(rel(a.total_mean, b.total_mean), 0.02);
  EXPECT_LT(rel(a.total_std, b.total_std), 0.02);
  EXPECT_LT(rel(a.count_mean, b.count_mean), 0.02);
  EXPECT_LT(rel(a.gap_len_mean, b.gap_len_mean), 0.02);
  EXPECT_LT(rel(a.start_mean, b.start_mean), 0.02);
  // Clipping pulls the moments away from the unclipped 45 / 15 frames.
  EXPECT_LT(b.total_std, 15.0);
}

TEST(Mask, FromGapsValidation) {
  EXPECT_NO_THROW(Mask::FromGaps(20, {{0, 2}, {3, 2}}));
  EXPECT_ANY_THROW(Mask::FromGaps(20, {{0, 2}, {2, 2}}));  // touching
  EXPECT_ANY_THROW(Mask::FromGaps(20, {{0, 4}, {2, 2}}));  // overlapping
  EXPECT_ANY_THROW(Mask::FromGaps(20, {{18, 4}}));         // past the end
  const Mask m = Mask::FromGaps(20, {{3, 2}, {10, 4}});
  EXPECT_EQ(m.MaskedFrames(), 6);
  EXPECT_FALSE(m.IsIntact(3));
  EXPECT_TRUE(m.IsIntact(5));
  EXPECT_FALSE(m.IsIntact(13));
}

TEST(Mask, JsonRoundTrip) {
  const Mask m = SampleMask(3, 149, MaskSpec{});
  const auto j = m.ToJson();
  EXPECT_EQ(j.at("T"), 149);
  EXPECT_TRUE(j.contains("gaps"));
  EXPECT_TRUE(j.contains("hop_ms"));
  EXPECT_EQ(Mask::FromJson(j), m);
}

TEST(ApplyMask, AllOnesAndAllZeros) {
  const RowMatrix x = RandomGrid(1, 30, 64);
  EXPECT_EQ(ApplyMask(x, Mask::AllIntact(30)).values, x);
  const Mask none = Mask::FromGaps(30, {{0, 30}});
  EXPECT_EQ(ApplyMask(x, none).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ApplyMask, SingleGap) {
  const RowMatrix x = RandomGrid(2, 30, 64);
  const auto a = ApplyMask(x, Mask::FromGaps(30, {{10, 10}}));
  for (int t = 0; t < 30; ++t) {
    if (t >= 10 && t < 20) {
      EXPECT_EQ(a.values.row(t).cwiseAbs().maxCoeff(), 0.0) << t;
    } else {
      EXPECT_EQ(a.values.row(t), x.row(t)) << t;
    }
  }
}

TEST(ApplyMask, RejectsLengthMismatch) {
  EXPECT_ANY_THROW(ApplyMask(RandomGrid(1, 30, 64), Mask::AllIntact(29)));
}

TEST(Composite, Formula) {
  const RowMatrix x = RandomGrid(3, 40, 64);
  RowMatrix y = RandomGrid(4, 40, 64) * 1.6 - RowMatrix::Constant(40, 64, 0.3);
  EXPECT_EQ(Composite(x, y, Mask::AllIntact(40)), x);
  EXPECT_EQ(Composite(x, y, Mask::FromGaps(40, {{0, 40}})), y.cwiseMax(0.0).cwiseMin(1.0));
  const Mask m = SampleMask(9, 149, MaskSpec{});
  const RowMatrix x2 = RandomGrid(5, 149, 64);
  EXPECT_EQ(Composite(x2, x2, m), x2);
  const RowMatrix y2 = RandomGrid(6, 149, 64) * 2.0;
  const RowMatrix o = Composite(x2, y2, m);
  for (int t = 0; t < 149; ++t) {
    if (m.IsIntact(t)) {
      EXPECT_EQ(o.row(t), x2.row(t));
    } else {
      EXPECT_EQ(o.row(t), y2.row(t).cwiseMin(1.0));
    }
  }
  EXPECT_ANY_THROW(Composite(x2, y, m));
}

}  // namespace
}  // namespace avi::corruption
