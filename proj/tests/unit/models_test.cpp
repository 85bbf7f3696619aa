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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "dbsgen/error.hpp"
#include "dbsgen/models/checkpoint.hpp"
#include "dbsgen/models/models.hpp"
#include "dbsgen/tensor/warp.hpp"
#include "support/gradcheck.hpp"

namespace dbsgen::models {
namespace {

using testing::gradient_check;
using testing::project;
using testing::random_tensor;

MotionPyramid run_motion(ModelState& s, std::size_t frame, Graph& g) {
  MotionNetVars net = bind(g, s.motion, false);
  Var latents = g.constant(s.motion_latents.value);
  return motion_forward(latent_slice(latents, frame), net);
}

// Plain-loop background generator used as an independent reference.
Tensor reference_background(const ModelState& s) {
  const BackgroundNetParams& p = s.background;
  const Tensor& z = s.background_latents.value;
  const std::size_t b = z.dim(0);
  std::vector<std::vector<double>> x(b);
  for (std::size_t r = 0; r < b; ++r) x[r] = {z[r * 3], z[r * 3 + 1], z[r * 3 + 2]};
  auto dense = [&](const DenseLayer& l) {
    const std::size_t out = l.weights.value.dim(0), in = l.weights.value.dim(1);
    for (auto& row : x) {
      std::vector<double> y(out);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = l.bias.value[o];
        for (std::size_t i = 0; i < in; ++i) acc += l.weights.value[o * in + i] * row[i];
        y[o] = acc;
      }
      row = y;
    }
  };
  for (std::size_t k = 0; k < 3; ++k) {
    dense(p.hidden[k]);
    const std::size_t f = x[0].size();
    for (std::size_t j = 0; j < f; ++j) {
      double mean = 0.0, var = 0.0;
      for (auto& row : x) mean += row[j] / b;
      for (auto& row : x) var += (row[j] - mean) * (row[j] - mean) / b;
      for (auto& row : x) {
        const double v = p.norms[k].gamma.value[j] * (row[j] - mean) / std::sqrt(var + 1e-5) + p.norms[k].beta.value[j];
        row[j] = v > 0 ? v : std::expm1(v);
      }
    }
  }
  dense(p.output);
  Tensor out(Shape{b, x[0].size()});
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < x[r].size(); ++j) out[r * x[r].size() + j] = 1.0 / (1.0 + std::exp(-x[r][j]));
  }
  return out;
}

TEST(Models, InitialMotionIsExactlyZeroAtEveryScale) {
  ModelState s = init_parameters(7, 3, 32, 24);
  Graph g;
  const MotionPyramid m = run_motion(s, 1, g);
  EXPECT_EQ(m.quarter.shape(), (Shape{2, 8, 6}));
  EXPECT_EQ(m.half.shape(), (Shape{2, 16, 12}));
  EXPECT_EQ(m.full.shape(), (Shape{2, 32, 24}));
  EXPECT_EQ(max_abs(m.quarter.value()), 0.0);
  EXPECT_EQ(max_abs(m.half.value()), 0.0);
  EXPECT_EQ(max_abs(m.full.value()), 0.0);
}

TEST(Models, FinerMapsRefineUpsampledCoarserMaps) {
  ModelState s = init_parameters(3, 2, 16, 16);
  std::mt19937_64 rng(11);
  s.motion.head_quarter.kernels.value = random_tensor(s.motion.head_quarter.kernels.value.shape(), rng, -0.05, 0.05);
  s.motion.head_quarter.bias.value = Tensor(Shape{2}, {0.3, -0.2});
  Graph g;
  const MotionPyramid m = run_motion(s, 0, g);
  EXPECT_GT(max_abs(m.quarter.value()), 0.0);
  EXPECT_EQ(m.half.value(), upsample2x(m.quarter.value(), true));
  EXPECT_EQ(m.full.value(), upsample2x(m.half.value(), true));
}

TEST(Models, MotionGradientsMatchFiniteDifferences) {
  ModelState s = init_parameters(5, 1, 16, 16);
  std::mt19937_64 rng(2);
  for (ConvLayer* head : {&s.motion.head_quarter, &s.motion.head_half, &s.motion.head_full}) {
    head->kernels.value = random_tensor(head->kernels.value.shape(), rng, -0.05, 0.05);
  }
  std::vector<Tensor> inputs{random_tensor(Shape{1, 2, 2}, rng), s.motion.conv2.bias.value,
                             s.motion.head_half.bias.value};
  auto build = [&](Graph& g, const std::vector<Var>& v) {
    MotionNetVars net = bind(g, s.motion, false);
    net.conv2.bias = v[1];
    net.head_half.bias = v[2];
    const MotionPyramid m = motion_forward(v[0], net);
    return ops::add(ops::add(project(m.quarter, 1), project(m.half, 2)), project(m.full, 3));
  };
  EXPECT_LT(gradient_check(inputs, build), 1e-4);
}

TEST(Models, BackgroundMatchesPlainLoopReferenceAndStaysInUnitInterval) {
  ModelState s = init_parameters(9, 5, 8, 16);
  std::mt19937_64 rng(4);
  s.background_latents.value = random_tensor(s.background_latents.value.shape(), rng);
  for (auto& n : s.background.norms) {
    n.gamma.value = random_tensor(n.gamma.value.shape(), rng, 0.5, 1.5);
    n.beta.value = random_tensor(n.beta.value.shape(), rng, -0.2, 0.2);
  }
  Graph g;
  BackgroundNetVars net = bind(g, s.background);
  Var out = background_forward(g.constant(s.background_latents.value), net, s.background, ops::BatchNormMode::train);
  ASSERT_EQ(out.shape(), (Shape{5, 3 * 8 * 16}));
  EXPECT_LT(max_abs_diff(out.value(), reference_background(s)), 1e-12);
  for (double v : out.value().values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  Var image = background_image(out, 2, 8, 16);
  ASSERT_EQ(image.shape(), (Shape{3, 8, 16}));
  EXPECT_EQ(image.value().at(1, 3, 5), out.value()[2 * 384 + 1 * 128 + 3 * 16 + 5]);
}

TEST(Models, BackgroundParameterCount) {
  const ModelState s = init_parameters(1, 2, 8, 8);
  const std::size_t hidden = (3 * 12 + 12 + 24) + (12 * 24 + 24 + 48) + (24 * 43 + 43 + 86);
  EXPECT_EQ(s.background.parameter_count(), hidden + 43 * 192 + 192);
}

TEST(Models, InitializationIsSeedDeterministic) {
  ModelState a = init_parameters(42, 4, 16, 8);
  ModelState b = init_parameters(42, 4, 16, 8);
  ModelState c = init_parameters(43, 4, 16, 8);
  const auto pa = a.all_parameters(), pb = b.all_parameters(), pc = c.all_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    any_diff = any_diff || !(pa[i]->value == pc[i]->value);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Models, LatentShapesAndDecayFlags) {
  ModelState s = init_parameters(0, 6, 24, 40);
  EXPECT_EQ(s.motion_latents.value.shape(), (Shape{6, 3, 5}));
  EXPECT_EQ(s.background_latents.value.shape(), (Shape{6, 3}));
  EXPECT_FALSE(s.motion_latents.decay);
  EXPECT_TRUE(s.motion.conv1.kernels.decay);
  EXPECT_FALSE(s.motion.conv1.bias.decay);
  EXPECT_TRUE(s.background.output.weights.decay);
  EXPECT_FALSE(s.background.norms[0].gamma.decay);
  EXPECT_EQ(s.all_parameters().size(), s.network_parameters().size() + 2);
}

TEST(Models, RejectsSizesNotDivisibleByEight) {
  EXPECT_THROW(init_parameters(0, 2, 20, 16), ShapeError);
  EXPECT_THROW(init_parameters(0, 2, 16, 0), ShapeError);
  EXPECT_THROW(init_parameters(0, 0, 16, 16), ShapeError);
}

class CheckpointTest : public ::testing::Test {
 protected:
  std::filesystem::path path_ = std::filesystem::temp_directory_path() /
                                ("dbsgen_ckpt_" + std::to_string(::getpid()) + ".bin");
  void TearDown() override { std::filesystem::remove(path_); }
};

TEST_F(CheckpointTest, RoundTripPreservesEverything) {
  ModelState s = init_parameters(8, 3, 16, 8);
  {
    Graph g;
    BackgroundNetVars net = bind(g, s.background);
    background_forward(g.constant(s.background_latents.value), net, s.background, ops::BatchNormMode::train);
  }
  save_checkpoint(s, path_);
  ModelState r = load_checkpoint(path_);
  EXPECT_EQ(r.frames, 3u);
  EXPECT_EQ(r.height, 16u);
  EXPECT_EQ(r.width, 8u);
  const auto ps = s.all_parameters(), pr = r.all_parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i]->value, pr[i]->value) << ps[i]->name;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(r.background.norms[i].stats.initialized);
    EXPECT_EQ(r.background.norms[i].stats.mean, s.background.norms[i].stats.mean);
    EXPECT_EQ(r.background.norms[i].stats.variance, s.background.norms[i].stats.variance);
  }
}

TEST_F(CheckpointTest, UnpopulatedStatisticsStayUnpopulated) {
  ModelState s = init_parameters(8, 2, 8, 8);
  save_checkpoint(s, path_);
  ModelState r = load_checkpoint(path_);
  EXPECT_FALSE(r.background.norms[1].stats.initialized);
}

TEST_F(CheckpointTest, MalformedFilesThrowDataError) {
  EXPECT_THROW(load_checkpoint(path_), DataError);
  { std::ofstream(path_) << "not a checkpoint\n"; }
  EXPECT_THROW(load_checkpoint(path_), DataError);

  save_checkpoint(init_parameters(1, 2, 8, 8), path_);
  const auto full = std::filesystem::file_size(path_);
  std::filesystem::resize_file(path_, full - 16);
  EXPECT_THROW(load_checkpoint(path_), DataError);
}

}  // namespace
}  // namespace dbsgen::models
