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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "dbsgen/models/models.hpp"
#include "dbsgen/tensor/graph.hpp"

namespace dbsgen::pipeline {

/// How the fixed (reference) image is chosen. Ranges are 0-based and
/// half-open; an empty range on the median strategy means the first
/// min(50, N) frames.
struct FixedImageStrategy {
  enum class Kind { frame_index, temporal_median };
  Kind kind = Kind::temporal_median;
  std::size_t frame = 0;
  std::size_t range_begin = 0;
  std::size_t range_end = 0;

  static FixedImageStrategy frame_index(std::size_t k) { return {Kind::frame_index, k, 0, 0}; }
  static FixedImageStrategy temporal_median(std::size_t begin = 0, std::size_t end = 0) {
    return {Kind::temporal_median, 0, begin, end};
  }
};

inline constexpr std::size_t kDefaultMedianFrames = 50;

struct TrainingConfig {
  double lambda = 0.25;
  double alpha = 0.1;
  double lr = 0.006;
  int epochs = 50;
  std::size_t batch_frames = 8;
  double weight_decay = 1e-4;
  // Multiplies the motion-map norm penalty; 1 is the unscaled sum of norms.
  double motion_reg_weight = 0.01;
  // When false the reconstruction term sees the warped frame as a constant,
  // so only the motion loss trains the motion generator.
  bool recons_updates_motion = false;
  std::uint64_t seed = 0;
  FixedImageStrategy fixed_image;
  // False drops the motion generator and its loss: frames are used unwarped.
  bool use_motion = true;
  // Worker threads for per-frame passes; results do not depend on it.
  std::size_t threads = 1;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

/// Per-pixel temporal median (mean of the two middle values for even counts)
/// or a single frame. Throws ArgumentError on an empty range or an index out
/// of bounds.
Tensor select_fixed_image(const std::vector<Tensor>& frames, const FixedImageStrategy& strategy);

struct ImagePyramid {
  Tensor full;
  Tensor half;
  Tensor quarter;
};

/// Full, 1/2 and 1/4 levels by 2x2 averaging. Throws ShapeError unless both
/// spatial dims are divisible by 4.
ImagePyramid build_pyramid(const Tensor& image);

/// Motion loss of one frame with the unweighted terms it is built from.
struct MotionLoss {
  Var total;
  Var residual_quarter;
  Var residual_half;
  Var residual_full;
  Var reg_quarter;
  Var reg_half;
  Var reg_full;
};

/// L^{1/4} + lambda L^{1/2} + lambda^2 L^{1} + reg_weight (|M^{1/4}| + |M^{1/2}| + |M|),
/// each term a Euclidean norm, with the warped frame compared to the fixed
/// image at every level. Frame and fixed pyramids enter as constants.
MotionLoss motion_loss(const ImagePyramid& frame, const ImagePyramid& fixed, const models::MotionPyramid& motion,
                       double lambda, double reg_weight = 1.0);

/// Sum of absolute differences.
Var reconstruction_loss(Var warped_frame, Var background);

/// Sum of squared entries over the given weights, times `weight_decay`.
/// Returns a zero constant in `graph` for an empty list.
Var weight_penalty(Graph& graph, const std::vector<Var>& weights, double weight_decay);

/// alpha * recons + motion + weight_decay * sum |theta|^2.
Var total_loss(Var recons, Var motion, const std::vector<Var>& weights, double alpha, double weight_decay);

/// Mean loss components of one epoch. Reconstruction and motion are means
/// over frames; reg is the mean weight penalty over mini-batches.
struct EpochLoss {
  int epoch = 0;
  double total = 0.0;
  double recons = 0.0;
  double motion = 0.0;
  double reg = 0.0;
};

struct MotionMaps {
  Tensor quarter;
  Tensor half;
  Tensor full;
};

struct SequenceArtifacts {
  std::vector<MotionMaps> motion;   // per frame, zero when motion is disabled
  std::vector<Tensor> backgrounds;  // per frame, 3 x H x W in (0, 1)
  std::vector<EpochLoss> trace;     // one entry per epoch
  Tensor fixed_image;
  models::ModelState state;
};

/// Inputs shared by every optimization step of one sequence.
struct TrainingData {
  std::vector<Tensor> frames;
  std::vector<ImagePyramid> pyramids;  // empty when motion is disabled
  Tensor fixed_image;
  ImagePyramid fixed;
};

/// Selects the fixed image and builds the pyramids. Throws like optimize().
TrainingData prepare_training_data(const std::vector<Tensor>& frames, const TrainingConfig& config);

/// Summed loss components of one mini-batch.
struct BatchLoss {
  double recons = 0.0;
  double motion = 0.0;
  double reg = 0.0;
};

/// Adds the gradients of
///   sum over batch frames (alpha * recons + motion) + weight penalty
/// into the parameters of `state` (without clearing them first) and folds
/// the batch statistics into the batch-norm running averages. The penalty
/// covers the decayed parameters of the enabled networks. Each frame gets its
/// own graph; their contributions are reduced in batch order, so the result
/// does not depend on config.threads. Throws NumericError on a non-finite loss.
BatchLoss accumulate_gradients(models::ModelState& state, const TrainingData& data,
                               const std::vector<std::size_t>& batch, const TrainingConfig& config);

/// Parameters updated by the optimizer for this config.
std::vector<Parameter*> trainable_parameters(models::ModelState& state, const TrainingConfig& config);

/// Called after every epoch; may be empty.
using EpochCallback = std::function<void(const EpochLoss&)>;

/// Jointly optimizes both generators and their latents with Adam over
/// shuffled mini-batches of frames, then extracts every frame's motion map
/// and background with batch norm in eval mode.
///
/// Frames are [3 x H x W] in [0, 1] with H and W multiples of 8. Throws
/// ArgumentError for fewer than two frames or inconsistent shapes,
/// ConfigError for an invalid config and NumericError on a non-finite loss.
SequenceArtifacts optimize(const std::vector<Tensor>& frames, const TrainingConfig& config,
                           const EpochCallback& on_epoch = {});

}  // namespace dbsgen::pipeline
