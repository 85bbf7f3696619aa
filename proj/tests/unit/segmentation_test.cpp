// Copyright 2026 The DBSGen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbsgen/segmentation/segmentation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbsgen/error.hpp"
#include "support/gradcheck.hpp"

namespace dbsgen::segmentation {
namespace {

Mask random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng, double p = 0.3) {
  std::bernoulli_distribution on(p);
  Mask m(h, w);
  for (auto& v : m.values) v = on(rng) ? 1 : 0;
  return m;
}

std::array<Mask, 3> replicate(const Mask& m) { return {m, m, m}; }

TEST(DynamicEntropy, ConstantMasksGiveZero) {
  std::mt19937_64 rng(1);
  const Mask m = random_mask(6, 7, rng);
  const std::vector<Mask> masks(5, m);
  const std::vector<std::array<Mask, 3>> channels(5, replicate(m));
  const EntropyMap e = dynamic_entropy(masks, channels);
  for (double v : e.combined.values()) EXPECT_EQ(v, 0.0);
  for (double v : e.per_channel.values()) EXPECT_EQ(v, 0.0);
}

TEST(DynamicEntropy, AlternatingMasksGiveOne) {
  std::mt19937_64 rng(2);
  const Mask a = random_mask(5, 5, rng);
  Mask b = a;
  for (auto& v : b.values) v = 1 - v;
  std::vector<Mask> masks;
  std::vector<std::array<Mask, 3>> channels;
  for (int i = 0; i < 6; ++i) {
    masks.push_back(i % 2 ? b : a);
    channels.push_back(replicate(masks.back()));
  }
  const EntropyMap e = dynamic_entropy(masks, channels);
  for (double v : e.combined.values()) EXPECT_EQ(v, 1.0);
  for (double v : e.per_channel.values()) EXPECT_EQ(v, 1.0);
}

TEST(DynamicEntropy, RandomMasksStayInUnitIntervalAndMatchCount) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Mask> masks;
    std::vector<std::array<Mask, 3>> channels;
    for (int i = 0; i < 7; ++i) {
      masks.push_back(random_mask(4, 3, rng, 0.5));
      channels.push_back({random_mask(4, 3, rng), random_mask(4, 3, rng), random_mask(4, 3, rng)});
    }
    const EntropyMap e = dynamic_entropy(masks, channels);
    for (std::size_t p = 0; p < 12; ++p) {
      int flips = 0;
      for (int i = 1; i < 7; ++i) flips += masks[i].values[p] != masks[i - 1].values[p];
      EXPECT_DOUBLE_EQ(e.combined[p], flips / 6.0);
      EXPECT_GE(e.combined[p], 0.0);
      EXPECT_LE(e.combined[p], 1.0);
    }
    for (double v : e.per_channel.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(DynamicEntropy, RejectsSingleFrame) {
  const Mask m(2, 2);
  EXPECT_THROW(dynamic_entropy({m}, {replicate(m)}), ArgumentError);
}

TEST(Thresholds, HandSubstitution) {
  ChannelStats stats;
  stats.mu = {0.10, 0.10, 0.10};
  stats.sigma = {0.05, 0.05, 0.05};
  stats.var_c = {0.02, 0.02, 0.02};
  Tensor c(Shape{1, 1});
  c[0] = 1.0;
  const Tensor r = distance_thresholds(stats, c, Betas{1.0, 2.0, 2.0});
  for (double v : r.values()) EXPECT_NEAR(v, 0.29, 1e-12);
}

TEST(Thresholds, ZeroEntropyReducesToMeanPlusSigma) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChannelStats stats;
  for (int c = 0; c < 3; ++c) {
    stats.mu[c] = u(rng);
    stats.sigma[c] = u(rng);
    stats.var_c[c] = u(rng);
  }
  const Betas betas{1.3, 2.7, 0.4};
  Tensor entropy(Shape{3, 4});
  const Tensor r = distance_thresholds(stats, entropy, betas);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < 12; ++p) EXPECT_EQ(r[c * 12 + p], stats.mu[c] + betas.beta1 * stats.sigma[c]);
}

TEST(Thresholds, MonotoneInEntropy) {
  ChannelStats stats;
  stats.mu = {0.1, 0.2, 0.3};
  stats.sigma = {0.05, 0.02, 0.01};
  stats.var_c = {0.01, 0.0, 0.03};
  Tensor entropy(Shape{1, 5});
  for (std::size_t i = 0; i < 5; ++i) entropy[i] = i / 4.0;
  const Tensor r = distance_thresholds(stats, entropy, Betas{});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 1; i < 5; ++i) EXPECT_GT(r[c * 5 + i], r[c * 5 + i - 1]);
}

TEST(SpatialVariance, MatchesTwoPassFormula) {
  std::mt19937_64 rng(5);
  const Tensor t = testing::random_tensor(Shape{3, 5, 6}, rng, 0.0, 1.0);
  const auto var = spatial_variance(t);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < 30; ++p) {
      s += t[c * 30 + p];
      s2 += t[c * 30 + p] * t[c * 30 + p];
    }
    EXPECT_NEAR(var[c], s2 / 30 - (s / 30) * (s / 30), 1e-12);
  }
}

TEST(InitialSegmentation, StatisticsOverAbsoluteForeground) {
  Tensor a(Shape{3, 1, 2}), b(Shape{3, 1, 2});
  // Channel 0 magnitudes {1, 1, 3, 3}: mean 2, sigma 1.
  a[0] = -1.0;
  a[1] = 1.0;
  b[0] = 3.0;
  b[1] = -3.0;
  const InitialSegmentation init = initial_segmentation({a, b}, 1.0);
  EXPECT_DOUBLE_EQ(init.stats.mu[0], 2.0);
  EXPECT_DOUBLE_EQ(init.stats.sigma[0], 1.0);
  EXPECT_EQ(init.stats.sigma[1], 0.0);
  EXPECT_EQ(init.per_channel[0][0].count(), 0u);
  EXPECT_EQ(init.per_channel[1][0].count(), 2u);
  EXPECT_EQ(init.combined[1].count(), 2u);
  // Zero channels never exceed a zero threshold.
  EXPECT_EQ(init.per_channel[1][1].count(), 0u);
}

TEST(InitialSegmentation, CombinedIsChannelUnion) {
  std::mt19937_64 rng(6);
  std::vector<Tensor> fg;
  for (int i = 0; i < 4; ++i) fg.push_back(testing::random_tensor(Shape{3, 5, 5}, rng));
  const InitialSegmentation init = initial_segmentation(fg, 0.8);
  for (std::size_t i = 0; i < fg.size(); ++i)
    for (std::size_t p = 0; p < 25; ++p) {
      const bool any = init.per_channel[i][0].values[p] || init.per_channel[i][1].values[p] ||
                       init.per_channel[i][2].values[p];
      EXPECT_EQ(init.combined[i].values[p], any ? 1 : 0);
    }
}

TEST(InitialSegmentation, RejectsSingleFrame) {
  EXPECT_THROW(initial_segmentation({Tensor(Shape{3, 2, 2})}), ArgumentError);
}

TEST(FinalSegmentation, StrictlyAboveThresholdInAnyChannel) {
  Tensor f(Shape{3, 1, 3}), r(Shape{3, 1, 3});
  for (double& v : r.values()) v = 0.5;
  f[0] = 0.5;   // equal: not foreground
  f[4] = -0.6;  // channel 1, pixel 1
  f[8] = 0.7;   // channel 2, pixel 2
  const Mask m = final_segmentation(f, r);
  EXPECT_EQ(m.values, (std::vector<std::uint8_t>{0, 1, 1}));
}

TEST(ExtractForeground, ZeroMotionIsDifference) {
  std::mt19937_64 rng(7);
  const Tensor img = testing::random_tensor(Shape{3, 4, 5}, rng, 0.0, 1.0);
  const Tensor bg = testing::random_tensor(Shape{3, 4, 5}, rng, 0.0, 1.0);
  const Tensor f = extract_foreground(img, Tensor(Shape{2, 4, 5}), bg);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i], img[i] - bg[i]);
  EXPECT_THROW(extract_foreground(img, Tensor(Shape{2, 4, 4}), bg), ShapeError);
}

TEST(PostProcess, ClosingIsIdempotent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Mask m = random_mask(16, 13, rng, 0.4);
    const Mask once = close(m, 3);
    EXPECT_EQ(close(once, 3), once);
  }
}

TEST(PostProcess, ClosingIsExtensive) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask m = random_mask(12, 12, rng, 0.3);
    const Mask closed = close(m, 5);
    for (std::size_t p = 0; p < m.values.size(); ++p) EXPECT_GE(closed.values[p], m.values[p]);
  }
}

TEST(PostProcess, FillsPinholeAndRemovesSpeck) {
  Mask m(11, 11);
  for (std::size_t y = 2; y < 9; ++y)
    for (std::size_t x = 2; x < 9; ++x) m.at(y, x) = 1;
  m.at(5, 5) = 0;
  Mask speck = m;
  speck.at(0, 10) = 1;
  const Mask out = post_process(speck, 3, 3);
  EXPECT_EQ(out.at(5, 5), 1);
  EXPECT_EQ(out.at(0, 10), 0);
  EXPECT_EQ(out.at(4, 4), 1);
}

TEST(PostProcess, KernelOneIsIdentity) {
  std::mt19937_64 rng(10);
  const Mask m = random_mask(9, 9, rng);
  EXPECT_EQ(post_process(m, 1, 1), m);
}

TEST(PostProcess, RejectsEvenKernels) {
  const Mask m(4, 4);
  EXPECT_THROW(post_process(m, 4, 3), ArgumentError);
  EXPECT_THROW(post_process(m, 3, 0), ArgumentError);
  EXPECT_THROW(close(m, 2), ArgumentError);
}

TEST(SegmentSequence, DetectsSquareOverStillBackground) {
  std::vector<Tensor> frames, motion, bgs;
  for (std::size_t i = 0; i < 6; ++i) {
    Tensor bg(Shape{3, 16, 16});
    for (double& v : bg.values()) v = 0.4;
    Tensor img = bg;
    for (std::size_t y = 4; y < 9; ++y)
      for (std::size_t x = 2 + i; x < 7 + i; ++x) img.at(0, y, x) = 0.9;
    frames.push_back(img);
    bgs.push_back(bg);
    motion.emplace_back(Shape{2, 16, 16});
  }
  SegmentationConfig cfg;
  cfg.postprocess = false;
  const SegmentationResult res = segment_sequence(frames, motion, bgs, cfg);
  ASSERT_EQ(res.masks.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(res.masks[i], res.raw[i]);
    EXPECT_EQ(res.masks[i].at(6, 4 + i), 1);
    EXPECT_EQ(res.masks[i].at(14, 14), 0);
  }
}

}  // namespace
}  // namespace dbsgen::segmentation
