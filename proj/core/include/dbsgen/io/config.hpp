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

#include <filesystem>
#include <string>

#include "dbsgen/pipeline/pipeline.hpp"
#include "dbsgen/segmentation/segmentation.hpp"

namespace dbsgen::io {

/// Everything a `run` needs besides the input sequence.
struct RunConfig {
  pipeline::TrainingConfig training;
  segmentation::SegmentationConfig segmentation;
};

/// Flat JSON object. Keys: lambda, alpha, lr, epochs, batch_frames,
/// weight_decay, motion_reg_weight, recons_updates_motion, seed, use_motion,
/// threads, fixed_image ("temporal_median" or "frame_index"), fixed_frame,
/// median_begin, median_end, initial_scale, beta1, beta2, beta3, postprocess,
/// median_kernel, closing_kernel. Missing keys keep their defaults; unknown
/// keys, bad types and out-of-range values raise ConfigError.
RunConfig parse_config(const std::string& json);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every key present, sorted, so equal configs serialize equally.
std::string config_json(const RunConfig& config);

/// 16 hex digits of the 64-bit FNV-1a hash of config_json().
std::string config_hash(const RunConfig& config);

}  // namespace dbsgen::io
