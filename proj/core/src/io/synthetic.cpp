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

#include "dbsgen/io/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "io/json_fields.hpp"

namespace dbsgen::io {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One travelling sinusoid: amplitude * sin(2 pi (fx x + fy y + t / period) + phase).
struct Wave {
  double amplitude;
  double fx, fy;
  double period;  // frames; 0 for a static wave
  double phase;

  double at(double x, double y, double t) const {
    const double temporal = period > 0.0 ? t / period : 0.0;
    return amplitude * std::sin(kTwoPi * (fx * x + fy * y + temporal) + phase);
  }
};

struct Scene {
  std::array<std::vector<Wave>, 3> texture;
  std::vector<Wave> dx;
  std::vector<Wave> dy;
  bool stripes = false;
  double height = 1.0;

  double color(std::size_t c, double x, double y) const {
    double v = 0.5;
    for (const Wave& w : texture[c]) v += w.at(x, y, 0.0);
    return v;
  }
};

Scene make_scene(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scene s;
  s.height = static_cast<double>(spec.height);
  s.stripes = spec.background == SyntheticSpec::Background::swaying_stripes;
  if (s.stripes) {
    const double f = 1.0 / 10.0;
    for (std::size_t c = 0; c < 3; ++c) {
      s.texture[c].push_back({0.3, f, 0.0, 0.0, phase(rng)});
      s.texture[c].push_back({0.05, 0.0, 1.0 / 23.0, 0.0, phase(rng)});
    }
  } else {
    // Shared spatial frequencies with per-channel phases give a colored
    // texture whose structure is visible in every channel.
    for (int j = 0; j < 6; ++j) {
      const double wavelength = 10.0 + 10.0 * unit(rng);
      const double angle = phase(rng);
      const double fx = std::cos(angle) / wavelength, fy = std::sin(angle) / wavelength;
      for (std::size_t c = 0; c < 3; ++c) s.texture[c].push_back({0.1, fx, fy, 0.0, phase(rng)});
    }
  }
  // Three displacement components with incommensurate periods so that the
  // background never repeats exactly within a sequence.
  const std::array<double, 3> weights{0.5, 0.3, 0.2};
  const std::array<double, 3> periods{1.0, 1.618, 0.707};
  for (std::size_t k = 0; k < 3; ++k) {
    const double wavelength = 24.0 + 24.0 * unit(rng);
    const double angle = phase(rng);
    const double fx = std::cos(angle) / wavelength, fy = std::sin(angle) / wavelength;
    const double period = spec.period * periods[k];
    s.dx.push_back({spec.amplitude * weights[k], fx, fy, period, phase(rng)});
    if (!s.stripes) s.dy.push_back({spec.amplitude * weights[k], fy, -fx, period, phase(rng)});
  }
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (height == 0 || width == 0) throw ArgumentError("synthetic frame size must be positive");
  if (frames < 2) throw ArgumentError("synthetic sequence needs at least two frames");
  if (!(amplitude >= 0.0)) throw ArgumentError("amplitude must be >= 0");
  if (!(period > 0.0)) throw ArgumentError("period must be > 0");
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");
  for (double c : object_color) {
    if (!(c >= 0.0 && c <= 1.0)) throw ArgumentError("object_color entries must lie in [0, 1]");
  }
  if (!object) return;
  if (object_size == 0) throw ArgumentError("object_size must be positive");
  for (std::size_t t = 0; t < frames; ++t) {
    const auto [x, y] = object_position(t);
    if (x < 0 || y < 0 || x + static_cast<long>(object_size) > static_cast<long>(width) ||
        y + static_cast<long>(object_size) > static_cast<long>(height)) {
      throw ArgumentError("object leaves the frame at frame " + std::to_string(t));
    }
  }
}

std::pair<long, long> SyntheticSpec::object_position(std::size_t t) const {
  const double td = static_cast<double>(t);
  return {std::lround(object_x + object_vx * td), std::lround(object_y + object_vy * td)};
}

SyntheticSequence generate_synthetic_sequence(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Scene scene = make_scene(spec, rng);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticSequence out;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double td = static_cast<double>(t);
    Tensor frame(Shape{3, spec.height, spec.width});
    LabelMap gt(spec.height, spec.width);
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double xd = static_cast<double>(x), yd = static_cast<double>(y);
        double dx = 0.0, dy = 0.0;
        for (const Wave& w : scene.dx) dx += w.at(xd, yd, td);
        for (const Wave& w : scene.dy) dy += w.at(xd, yd, td);
        // Stripes sway more towards the top, like foliage on a stem.
        if (scene.stripes) dx *= 1.0 - yd / scene.height;
        for (std::size_t c = 0; c < 3; ++c) frame.at(c, y, x) = scene.color(c, xd + dx, yd + dy);
      }
    }
    if (spec.object) {
      const auto [ox, oy] = spec.object_position(t);
      for (std::size_t y = static_cast<std::size_t>(oy); y < static_cast<std::size_t>(oy) + spec.object_size; ++y) {
        for (std::size_t x = static_cast<std::size_t>(ox); x < static_cast<std::size_t>(ox) + spec.object_size; ++x) {
          for (std::size_t c = 0; c < 3; ++c) frame.at(c, y, x) = spec.object_color[c];
          gt.at(y, x) = Label::moving;
        }
      }
    }
    for (double& v : frame.values()) v = std::clamp(v + spec.noise_sigma * noise(rng), 0.0, 1.0);
    out.frames.push_back(std::move(frame));
    out.ground_truth.push_back(std::move(gt));
  }
  return out;
}

void write_sequence(const SyntheticSequence& sequence, const fs::path& directory, int jpeg_quality) {
  fs::create_directories(directory / "input");
  fs::create_directories(directory / "groundtruth");
  const std::vector<int> jpeg{cv::IMWRITE_JPEG_QUALITY, jpeg_quality};
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    const Tensor& f = sequence.frames[i];
    cv::Mat img(static_cast<int>(f.dim(1)), static_cast<int>(f.dim(2)), CV_8UC3);
    for (std::size_t y = 0; y < f.dim(1); ++y) {
      auto* row = img.ptr<cv::Vec3b>(static_cast<int>(y));
      for (std::size_t x = 0; x < f.dim(2); ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          row[x][2 - c] = static_cast<std::uint8_t>(std::lround(std::clamp(f.at(c, y, x), 0.0, 1.0) * 255.0));
        }
      }
    }
    const fs::path frame_path = directory / "input" / frame_file_name("in", i + 1, "jpg");
    if (!cv::imwrite(frame_path.string(), img, jpeg)) throw DataError("cannot write " + frame_path.string());

    const LabelMap& gt = sequence.ground_truth[i];
    cv::Mat labels(static_cast<int>(gt.height), static_cast<int>(gt.width), CV_8UC1);
    for (std::size_t p = 0; p < gt.values.size(); ++p) labels.data[p] = gray_from_label(gt.values[p]);
    const fs::path gt_path = directory / "groundtruth" / frame_file_name("gt", i + 1, "png");
    if (!cv::imwrite(gt_path.string(), labels)) throw DataError("cannot write " + gt_path.string());
  }
  std::ofstream roi(directory / "temporalROI.txt");
  roi << 1 << ' ' << sequence.frames.size() << '\n';
  if (!roi) throw DataError("cannot write temporalROI.txt in " + directory.string());
}

SyntheticSpec parse_synthetic_spec(const std::string& json) {
  using namespace detail;
  SyntheticSpec spec;
  FieldTable t;
  t.add("height", number(spec.height));
  t.add("width", number(spec.width));
  t.add("frames", number(spec.frames));
  t.add("background", [&](const Json& v) {
    const std::string mode = v.get<std::string>();
    if (mode == "oscillating_texture") {
      spec.background = SyntheticSpec::Background::oscillating_texture;
    } else if (mode == "swaying_stripes") {
      spec.background = SyntheticSpec::Background::swaying_stripes;
    } else {
      throw ConfigError("unknown background mode \"" + mode + "\"");
    }
  });
  t.add("amplitude", number(spec.amplitude));
  t.add("period", number(spec.period));
  t.add("object", boolean(spec.object));
  t.add("object_size", number(spec.object_size));
  t.add("object_x", number(spec.object_x));
  t.add("object_y", number(spec.object_y));
  t.add("object_vx", number(spec.object_vx));
  t.add("object_vy", number(spec.object_vy));
  t.add("object_color", [&](const Json& v) {
    if (!v.is_array() || v.size() != 3) throw ConfigError("expected an array of three numbers");
    for (std::size_t c = 0; c < 3; ++c) spec.object_color[c] = v.at(c).get<double>();
  });
  t.add("noise_sigma", number(spec.noise_sigma));
  t.add("seed", number(spec.seed));
  t.apply(parse_json(json, "synthetic spec"), "synthetic spec");
  try {
    spec.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid synthetic spec: ") + e.what());
  }
  return spec;
}

SyntheticSpec load_synthetic_spec(const fs::path& path) { return parse_synthetic_spec(detail::read_text(path)); }

}  // namespace dbsgen::io
