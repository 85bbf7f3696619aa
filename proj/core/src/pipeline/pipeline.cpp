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

#include "dbsgen/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "dbsgen/error.hpp"
#include "dbsgen/tensor/adam.hpp"
#include "dbsgen/tensor/ops.hpp"
#include "dbsgen/tensor/warp.hpp"

namespace dbsgen::pipeline {

void TrainingConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive and finite");
  };
  positive(lambda, "lambda");
  positive(alpha, "alpha");
  positive(lr, "lr");
  positive(weight_decay, "weight_decay");
  if (!(motion_reg_weight >= 0.0) || !std::isfinite(motion_reg_weight)) {
    throw ConfigError("motion_reg_weight must be non-negative and finite");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_frames < 1) throw ConfigError("batch_frames must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

Tensor select_fixed_image(const std::vector<Tensor>& frames, const FixedImageStrategy& strategy) {
  if (frames.empty()) throw ArgumentError("cannot select a fixed image from an empty sequence");
  const std::size_t n = frames.size();
  if (strategy.kind == FixedImageStrategy::Kind::frame_index) {
    if (strategy.frame >= n) {
      throw ArgumentError("fixed frame " + std::to_string(strategy.frame) + " out of range for " + std::to_string(n) +
                          " frames");
    }
    return frames[strategy.frame];
  }
  std::size_t begin = strategy.range_begin;
  std::size_t end = strategy.range_end;
  if (begin == 0 && end == 0) end = std::min(kDefaultMedianFrames, n);
  if (begin >= end || end > n) {
    throw ArgumentError("median range [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") is empty or exceeds " + std::to_string(n) + " frames");
  }
  const std::size_t count = end - begin;
  Tensor out = Tensor::zeros_like(frames[begin]);
  std::vector<double> column(count);
  for (std::size_t i = begin; i < end; ++i) require_same_shape(frames[i], out, "select_fixed_image");
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t i = 0; i < count; ++i) column[i] = frames[begin + i][p];
    const std::size_t mid = count / 2;
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    double median = column[mid];
    if (count % 2 == 0) {
      const double lower = *std::max_element(column.begin(), column.begin() + mid);
      median = 0.5 * (lower + median);
    }
    out[p] = median;
  }
  return out;
}

ImagePyramid build_pyramid(const Tensor& image) {
  if (image.rank() != 3 || image.dim(1) % 4 != 0 || image.dim(2) % 4 != 0) {
    throw ShapeError("pyramid needs [c x H x W] with H, W divisible by 4, got " + to_string(image.shape()));
  }
  ImagePyramid p;
  p.full = image;
  p.half = downsample2x(p.full);
  p.quarter = downsample2x(p.half);
  return p;
}

namespace {

Var residual_norm(Graph& g, const Tensor& image, const Tensor& fixed, Var motion) {
  if (image.dim(1) != motion.shape()[1] || image.dim(2) != motion.shape()[2]) {
    throw ShapeError("motion " + to_string(motion.shape()) + " does not match image " + to_string(image.shape()));
  }
  require_same_shape(image, fixed, "motion_loss");
  return ops::l2_norm(ops::sub(ops::bilinear_warp(g.constant(image), motion), g.constant(fixed)));
}

}  // namespace

MotionLoss motion_loss(const ImagePyramid& frame, const ImagePyramid& fixed, const models::MotionPyramid& motion,
                       double lambda, double reg_weight) {
  Graph& g = motion.full.graph();
  MotionLoss l;
  l.residual_quarter = residual_norm(g, frame.quarter, fixed.quarter, motion.quarter);
  l.residual_half = residual_norm(g, frame.half, fixed.half, motion.half);
  l.residual_full = residual_norm(g, frame.full, fixed.full, motion.full);
  l.reg_quarter = ops::l2_norm(motion.quarter);
  l.reg_half = ops::l2_norm(motion.half);
  l.reg_full = ops::l2_norm(motion.full);
  Var data = ops::add(ops::add(l.residual_quarter, ops::scale(l.residual_half, lambda)),
                      ops::scale(l.residual_full, lambda * lambda));
  Var reg = ops::add(ops::add(l.reg_quarter, l.reg_half), l.reg_full);
  l.total = ops::add(data, ops::scale(reg, reg_weight));
  return l;
}

Var reconstruction_loss(Var warped_frame, Var background) {
  require_same_shape(warped_frame.value(), background.value(), "reconstruction_loss");
  return ops::l1_norm(ops::sub(warped_frame, background));
}

Var weight_penalty(Graph& graph, const std::vector<Var>& weights, double weight_decay) {
  if (weights.empty()) return graph.constant(Tensor::scalar(0.0));
  Var acc = ops::sum_squares(weights.front());
  for (std::size_t i = 1; i < weights.size(); ++i) acc = ops::add(acc, ops::sum_squares(weights[i]));
  return ops::scale(acc, weight_decay);
}

Var total_loss(Var recons, Var motion, const std::vector<Var>& weights, double alpha, double weight_decay) {
  return ops::add(ops::add(ops::scale(recons, alpha), motion), weight_penalty(recons.graph(), weights, weight_decay));
}

namespace {

void check_frames(const std::vector<Tensor>& frames) {
  if (frames.size() < 2) throw ArgumentError("optimization needs at least two frames");
  const Shape& shape = frames.front().shape();
  if (shape.size() != 3 || shape[0] != 3) throw ShapeError("frames must be [3 x H x W], got " + to_string(shape));
  if (shape[1] % 8 != 0 || shape[2] % 8 != 0) {
    throw ShapeError("frame size " + to_string(shape) + " is not a multiple of 8; pad the sequence first");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].shape() != shape) {
      throw ShapeError("frame " + std::to_string(i) + " has shape " + to_string(frames[i].shape()) + ", expected " +
                       to_string(shape));
    }
    frames[i].check_finite("input frame " + std::to_string(i));
  }
}

// One frame's contribution to a mini-batch step.
struct FramePass {
  std::unique_ptr<Graph> graph;
  Tensor background_grad;
  double recons = 0.0;
  double motion = 0.0;
  bool finite = true;
};

// Runs fn(0..count-1) on up to `threads` workers. Each index is handled by
// exactly one worker, so results only depend on the index.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, count);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

FramePass frame_pass(models::ModelState& state, const TrainingData& data, std::size_t frame, const Tensor& background,
                     const TrainingConfig& config) {
  FramePass p;
  p.graph = std::make_unique<Graph>(Graph::Deposit::deferred);
  Graph& g = *p.graph;
  Var b = g.variable(background);
  Var loss;
  if (config.use_motion) {
    models::MotionNetVars mnet = models::bind(g, state.motion);
    Var latent = models::latent_slice(g.parameter(state.motion_latents), frame);
    const models::MotionPyramid m = models::motion_forward(latent, mnet);
    const MotionLoss ml = motion_loss(data.pyramids[frame], data.fixed, m, config.lambda, config.motion_reg_weight);
    Var motion = config.recons_updates_motion ? m.full : g.constant(m.full.value());
    Var recons = reconstruction_loss(ops::bilinear_warp(g.constant(data.frames[frame]), motion), b);
    loss = ops::add(ops::scale(recons, config.alpha), ml.total);
    p.recons = recons.value().item();
    p.motion = ml.total.value().item();
  } else {
    Var recons = reconstruction_loss(g.constant(data.frames[frame]), b);
    loss = ops::scale(recons, config.alpha);
    p.recons = recons.value().item();
  }
  p.finite = std::isfinite(loss.value().item());
  if (p.finite) {
    g.backward(loss);
    p.background_grad = g.grad(b);
  }
  return p;
}

void extract(models::ModelState& state, const TrainingConfig& config, SequenceArtifacts& out) {
  const std::size_t n = state.frames, h = state.height, w = state.width;
  {
    Graph g;
    models::BackgroundNetVars bnet = models::bind(g, state.background, false);
    Var all = models::background_forward(g.constant(state.background_latents.value), bnet, state.background,
                                         ops::BatchNormMode::eval);
    for (std::size_t i = 0; i < n; ++i) out.backgrounds.push_back(models::background_image(all, i, h, w).value());
  }
  out.motion.resize(n);
  if (!config.use_motion) {
    for (MotionMaps& m : out.motion) {
      m.quarter = Tensor(Shape{2, h / 4, w / 4});
      m.half = Tensor(Shape{2, h / 2, w / 2});
      m.full = Tensor(Shape{2, h, w});
    }
    return;
  }
  parallel_for(n, config.threads, [&](std::size_t i) {
    Graph g;
    models::MotionNetVars mnet = models::bind(g, state.motion, false);
    const models::MotionPyramid m =
        models::motion_forward(models::latent_slice(g.constant(state.motion_latents.value), i), mnet);
    out.motion[i] = {m.quarter.value(), m.half.value(), m.full.value()};
  });
}

}  // namespace

TrainingData prepare_training_data(const std::vector<Tensor>& frames, const TrainingConfig& config) {
  check_frames(frames);
  TrainingData data;
  data.frames = frames;
  data.fixed_image = select_fixed_image(frames, config.fixed_image);
  if (config.use_motion) {
    data.fixed = build_pyramid(data.fixed_image);
    for (const Tensor& f : frames) data.pyramids.push_back(build_pyramid(f));
  }
  return data;
}

std::vector<Parameter*> trainable_parameters(models::ModelState& state, const TrainingConfig& config) {
  if (config.use_motion) return state.all_parameters();
  std::vector<Parameter*> params = state.background.parameters();
  params.push_back(&state.background_latents);
  return params;
}

BatchLoss accumulate_gradients(models::ModelState& state, const TrainingData& data,
                               const std::vector<std::size_t>& batch, const TrainingConfig& config) {
  if (batch.empty()) throw ArgumentError("empty mini-batch");
  for (std::size_t i : batch) {
    if (i >= data.frames.size()) throw ArgumentError("mini-batch frame index out of range");
  }
  Graph g0;
  models::BackgroundNetVars bnet = models::bind(g0, state.background);
  Var latents = ops::gather_rows(g0.parameter(state.background_latents), batch);
  Var backgrounds = models::background_forward(latents, bnet, state.background, ops::BatchNormMode::train);
  std::vector<Var> weights;
  for (Parameter* p : trainable_parameters(state, config)) {
    if (p->decay) weights.push_back(g0.parameter(*p));
  }
  Var penalty = weight_penalty(g0, weights, config.weight_decay);

  BatchLoss loss;
  const std::size_t b = batch.size();
  const std::size_t pixels = 3 * state.height * state.width;
  Tensor background_grads(Shape{b, pixels});
  // Frames run in waves of `threads`; each wave deposits in batch order
  // before the next starts, which bounds memory to one graph per worker.
  for (std::size_t wave = 0; wave < b; wave += config.threads) {
    const std::size_t count = std::min(config.threads, b - wave);
    std::vector<FramePass> passes(count);
    parallel_for(count, config.threads, [&](std::size_t j) {
      const Tensor image = models::background_image(backgrounds, wave + j, state.height, state.width).value();
      passes[j] = frame_pass(state, data, batch[wave + j], image, config);
    });
    for (std::size_t j = 0; j < count; ++j) {
      FramePass& p = passes[j];
      if (!p.finite) {
        throw NumericError("non-finite loss at frame " + std::to_string(batch[wave + j]) + " (recons " +
                           std::to_string(p.recons) + ", motion " + std::to_string(p.motion) + ")");
      }
      p.graph->deposit_gradients();
      std::copy(p.background_grad.data(), p.background_grad.data() + pixels,
                background_grads.data() + (wave + j) * pixels);
      loss.recons += p.recons;
      loss.motion += p.motion;
    }
  }
  loss.reg = penalty.value().item();
  if (!std::isfinite(loss.reg)) throw NumericError("non-finite weight penalty");
  // Chain rule through the shared background generator: the gradient of
  // sum_i <B_i, dL/dB_i> with dL/dB_i held fixed is the frames' contribution.
  g0.backward(ops::add(penalty, ops::dot(backgrounds, background_grads)));
  return loss;
}

SequenceArtifacts optimize(const std::vector<Tensor>& frames, const TrainingConfig& config,
                           const EpochCallback& on_epoch) {
  config.validate();
  const TrainingData data = prepare_training_data(frames, config);
  const std::size_t n = frames.size();
  models::ModelState state = models::init_parameters(config.seed, n, frames.front().dim(1), frames.front().dim(2));
  Adam adam(trainable_parameters(state, config), {.lr = config.lr});

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eed5eed5eed5eedULL);

  SequenceArtifacts out;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLoss e;
    e.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_frames) {
      const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
      const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + config.batch_frames));
      adam.zero_grad();
      BatchLoss b;
      try {
        b = accumulate_gradients(state, data, std::vector<std::size_t>(first, last), config);
      } catch (const NumericError& err) {
        throw NumericError("epoch " + std::to_string(epoch) + ": " + err.what());
      }
      adam.step();
      e.recons += b.recons;
      e.motion += b.motion;
      e.reg += b.reg;
      ++batches;
    }
    e.recons /= static_cast<double>(n);
    e.motion /= static_cast<double>(n);
    e.reg /= static_cast<double>(batches);
    e.total = config.alpha * e.recons + e.motion + e.reg;
    out.trace.push_back(e);
    if (on_epoch) on_epoch(e);
  }

  extract(state, config, out);
  out.fixed_image = data.fixed_image;
  out.state = std::move(state);
  return out;
}

}  // namespace dbsgen::pipeline
