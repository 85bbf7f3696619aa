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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dbsgen/io/dataset.hpp"

namespace dbsgen::io {

/// Dynamic scene with a known foreground: a texture displaced by a smooth,
/// temporally oscillating field plus a rigid square on a linear path.
struct SyntheticSpec {
  enum class Background { oscillating_texture, swaying_stripes };

  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t frames = 60;
  Background background = Background::oscillating_texture;
  double amplitude = 3.0;  // peak displacement in pixels
  double period = 10.0;    // frames per oscillation of the main component
  bool object = true;
  std::size_t object_size = 12;
  double object_x = 4.0;  // top-left corner at frame 0
  double object_y = 26.0;
  double object_vx = 0.8;  // pixels per frame
  double object_vy = 0.0;
  std::array<double, 3> object_color{0.9, 0.15, 0.1};
  double noise_sigma = 0.01;
  std::uint64_t seed = 7;

  /// Throws ArgumentError when a field is out of range or the object leaves the frame.
  void validate() const;
  /// Top-left (x, y) of the object at frame t (0-based), rounded to pixels.
  std::pair<long, long> object_position(std::size_t t) const;
};

struct SyntheticSequence {
  std::vector<Tensor> frames;  // [3 x height x width] in [0, 1]
  std::vector<LabelMap> ground_truth;
};

SyntheticSequence generate_synthetic_sequence(const SyntheticSpec& spec);

/// Writes input/in%06d.jpg, groundtruth/gt%06d.png and temporalROI.txt.
void write_sequence(const SyntheticSequence& sequence, const std::filesystem::path& directory, int jpeg_quality = 95);

/// Reads a JSON spec; keys are the field names above, `background` is
/// "oscillating_texture" or "swaying_stripes" and `object_color` a 3-array.
/// Unknown keys raise ConfigError.
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
SyntheticSpec parse_synthetic_spec(const std::string& json);

}  // namespace dbsgen::io
