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

#include "dbsgen/io/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dbsgen/error.hpp"

namespace dbsgen::io {

namespace fs = std::filesystem;
using segmentation::Mask;

Label label_from_gray(std::uint8_t gray) {
  switch (gray) {
    case 0: return Label::static_bg;
    case 50: return Label::shadow;
    case 85: return Label::outside_roi;
    case 170: return Label::unknown;
    case 255: return Label::moving;
    default: throw DataError("ground-truth gray value " + std::to_string(gray) + " is not a known label");
  }
}

std::uint8_t gray_from_label(Label label) {
  switch (label) {
    case Label::static_bg: return 0;
    case Label::shadow: return 50;
    case Label::outside_roi: return 85;
    case Label::unknown: return 170;
    case Label::moving: return 255;
  }
  return 0;
}

std::string frame_file_name(const char* prefix, std::size_t index, const char* extension) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%06zu.%s", prefix, index, extension);
  return buf;
}

std::size_t padded_size(std::size_t n) { return (n + 7) / 8 * 8; }

namespace {

// Numbered files "<prefix>NNNNNN.<ext>" in a directory, keyed by number.
std::map<std::size_t, fs::path> numbered_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::map<std::size_t, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::size_t expect = prefix.size() + 6 + 1 + ext.size();
    if (name.size() != expect || name.compare(0, prefix.size(), prefix) != 0 ||
        name.compare(name.size() - ext.size(), ext.size(), ext) != 0 || name[prefix.size() + 6] != '.') {
      continue;
    }
    const std::string digits = name.substr(prefix.size(), 6);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    out[std::stoul(digits)] = entry.path();
  }
  return out;
}

cv::Mat read_image(const fs::path& path, int flags) {
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw DataError("cannot decode image " + path.string());
  return m;
}

Tensor tensor_from_bgr(const cv::Mat& bgr) {
  const auto h = static_cast<std::size_t>(bgr.rows), w = static_cast<std::size_t>(bgr.cols);
  Tensor t(Shape{3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = row[x][2 - c] / 255.0;
    }
  }
  return t;
}

std::pair<std::size_t, std::size_t> read_roi(const fs::path& file) {
  std::ifstream in(file);
  long a = 0, b = 0;
  if (!(in >> a >> b) || a < 1 || b < a) throw DataError("malformed temporal ROI file " + file.string());
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

}  // namespace

Tensor pad_image(const Tensor& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3 || image.dim(1) == 0 || image.dim(2) == 0 || height < image.dim(1) || width < image.dim(2)) {
    throw ShapeError("cannot pad " + to_string(image.shape()) + " to " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out(Shape{c, height, width});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) out.at(ch, y, x) = image.at(ch, std::min(y, h - 1), std::min(x, w - 1));
    }
  }
  return out;
}

Tensor crop_image(const Tensor& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3 || height > image.dim(1) || width > image.dim(2)) {
    throw ShapeError("cannot crop " + to_string(image.shape()) + " to " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  Tensor out(Shape{image.dim(0), height, width});
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) out.at(c, y, x) = image.at(c, y, x);
    }
  }
  return out;
}

Mask crop_mask(const Mask& mask, std::size_t height, std::size_t width) {
  if (height > mask.height || width > mask.width) throw ShapeError("crop larger than mask");
  Mask out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    std::copy_n(mask.values.begin() + static_cast<std::ptrdiff_t>(y * mask.width), width,
                out.values.begin() + static_cast<std::ptrdiff_t>(y * width));
  }
  return out;
}

namespace {

// Decodes the files listed in the manifest, filling dims and padding.
void decode(Sequence& seq, int downscale) {
  SequenceManifest& m = seq.manifest;
  const double scale = 1.0 / downscale;
  for (const fs::path& f : m.frame_files) {
    cv::Mat img = read_image(f, cv::IMREAD_COLOR);
    if (downscale > 1) cv::resize(img, img, cv::Size(), scale, scale, cv::INTER_AREA);
    if (m.original_height == 0) {
      m.original_height = static_cast<std::size_t>(img.rows);
      m.original_width = static_cast<std::size_t>(img.cols);
      m.height = padded_size(m.original_height);
      m.width = padded_size(m.original_width);
    } else if (static_cast<std::size_t>(img.rows) != m.original_height ||
               static_cast<std::size_t>(img.cols) != m.original_width) {
      throw DataError("frame " + f.string() + " differs in size from the first frame");
    }
    seq.frames.push_back(pad_image(tensor_from_bgr(img), m.height, m.width));
  }
  for (const fs::path& f : m.gt_files) {
    cv::Mat img = read_image(f, cv::IMREAD_GRAYSCALE);
    if (downscale > 1) {
      cv::resize(img, img, cv::Size(static_cast<int>(m.original_width), static_cast<int>(m.original_height)), 0, 0,
                 cv::INTER_NEAREST);
    }
    if (static_cast<std::size_t>(img.rows) != m.original_height ||
        static_cast<std::size_t>(img.cols) != m.original_width) {
      throw DataError("ground truth " + f.string() + " differs in size from the frames");
    }
    LabelMap labels(m.original_height, m.original_width);
    for (std::size_t y = 0; y < labels.height; ++y) {
      const auto* row = img.ptr<std::uint8_t>(static_cast<int>(y));
      for (std::size_t x = 0; x < labels.width; ++x) labels.at(y, x) = label_from_gray(row[x]);
    }
    seq.ground_truth.push_back(std::move(labels));
  }
}

}  // namespace

Sequence load_cdnet_sequence(const fs::path& directory, const LoadOptions& options) {
  const fs::path input = directory / "input";
  if (!fs::is_directory(input)) throw DataError("missing input directory " + input.string());
  if (options.downscale < 1) throw ArgumentError("downscale must be >= 1");
  const auto frames = numbered_files(input, "in", "jpg");
  if (frames.empty()) throw DataError("no in%06d.jpg frames in " + input.string());

  const fs::path gt_dir = directory / "groundtruth";
  const bool has_gt = fs::is_directory(gt_dir);
  std::map<std::size_t, fs::path> gts;
  if (has_gt) {
    gts = numbered_files(gt_dir, "gt", "png");
    if (gts.size() != frames.size()) {
      throw DataError("frame/ground-truth count mismatch: " + std::to_string(frames.size()) + " frames, " +
                      std::to_string(gts.size()) + " ground-truth files");
    }
  }

  const std::size_t first_file = frames.begin()->first;
  const std::size_t last_file = frames.rbegin()->first;
  std::pair<std::size_t, std::size_t> roi{first_file, last_file};
  if (fs::exists(directory / "temporalROI.txt")) roi = read_roi(directory / "temporalROI.txt");

  std::size_t start = options.start == 0 ? roi.first : options.start;
  start = std::max(start, first_file);

  Sequence seq;
  SequenceManifest& m = seq.manifest;
  m.name = directory.filename().string();
  if (m.name.empty()) m.name = directory.parent_path().filename().string();
  for (auto it = frames.lower_bound(start); it != frames.end(); ++it) {
    if (options.max_frames != 0 && m.frame_files.size() == options.max_frames) break;
    m.frame_files.push_back(it->second);
    if (has_gt) {
      auto g = gts.find(it->first);
      if (g == gts.end()) throw DataError("no ground truth for frame " + it->second.string());
      m.gt_files.push_back(g->second);
    }
  }
  if (m.frame_files.empty()) throw DataError("no frames at or after file number " + std::to_string(start));
  m.first_index = frames.lower_bound(start)->first;
  m.frames = m.frame_files.size();
  const std::size_t last_loaded = m.first_index + m.frames - 1;
  if (roi.second < m.first_index || roi.first > last_loaded) {
    throw DataError("temporal ROI does not overlap the loaded frames of " + directory.string());
  }
  m.roi_first = std::max(roi.first, m.first_index) - m.first_index + 1;
  m.roi_last = std::min(roi.second, last_loaded) - m.first_index + 1;

  decode(seq, options.downscale);
  return seq;
}

Sequence load_frame_directory(const fs::path& directory, const LoadOptions& options) {
  if (!fs::is_directory(directory)) throw DataError("missing frame directory " + directory.string());
  if (options.downscale < 1) throw ArgumentError("downscale must be >= 1");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && (ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  const std::size_t start = std::max<std::size_t>(options.start, 1);
  if (start > files.size()) {
    throw DataError("no image files at or after position " + std::to_string(start) + " in " + directory.string());
  }
  Sequence seq;
  SequenceManifest& m = seq.manifest;
  m.name = directory.filename().string();
  if (m.name.empty()) m.name = directory.parent_path().filename().string();
  for (std::size_t i = start - 1; i < files.size(); ++i) {
    if (options.max_frames != 0 && m.frame_files.size() == options.max_frames) break;
    m.frame_files.push_back(files[i]);
  }
  m.first_index = start;
  m.frames = m.frame_files.size();
  m.roi_first = 1;
  m.roi_last = m.frames;
  decode(seq, options.downscale);
  return seq;
}

Sequence load_sequence(const fs::path& directory, const LoadOptions& options) {
  return fs::is_directory(directory / "input") ? load_cdnet_sequence(directory, options)
                                               : load_frame_directory(directory, options);
}

void write_masks(const std::vector<Mask>& masks, const fs::path& directory, std::size_t first_index,
                 std::optional<std::pair<std::size_t, std::size_t>> crop) {
  fs::create_directories(directory);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Mask m = crop ? crop_mask(masks[i], crop->first, crop->second) : masks[i];
    cv::Mat img(static_cast<int>(m.height), static_cast<int>(m.width), CV_8UC1);
    for (std::size_t p = 0; p < m.values.size(); ++p) img.data[p] = m.values[p] ? 255 : 0;
    const fs::path path = directory / frame_file_name("bin", first_index + i, "png");
    if (!cv::imwrite(path.string(), img)) throw DataError("cannot write " + path.string());
  }
}

std::vector<Mask> read_masks(const fs::path& directory, std::size_t first_index, std::size_t count) {
  std::vector<Mask> out;
  for (std::size_t i = 0; i < count; ++i) {
    const cv::Mat img = read_image(directory / frame_file_name("bin", first_index + i, "png"), cv::IMREAD_GRAYSCALE);
    Mask m(static_cast<std::size_t>(img.rows), static_cast<std::size_t>(img.cols));
    for (std::size_t y = 0; y < m.height; ++y) {
      const auto* row = img.ptr<std::uint8_t>(static_cast<int>(y));
      for (std::size_t x = 0; x < m.width; ++x) m.at(y, x) = row[x] != 0;
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_rgb(const Tensor& image, const fs::path& path) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("write_rgb expects [3 x H x W]");
  cv::Mat img(static_cast<int>(image.dim(1)), static_cast<int>(image.dim(2)), CV_8UC3);
  for (std::size_t y = 0; y < image.dim(1); ++y) {
    auto* row = img.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < image.dim(2); ++x) {
      for (std::size_t c = 0; c < 3; ++c) row[x][2 - c] = to_byte(image.at(c, y, x));
    }
  }
  if (!cv::imwrite(path.string(), img)) throw DataError("cannot write " + path.string());
}

void write_gray(const Tensor& map, const fs::path& path) {
  if (map.rank() != 2) throw ShapeError("write_gray expects an H x W map");
  cv::Mat img(static_cast<int>(map.dim(0)), static_cast<int>(map.dim(1)), CV_8UC1);
  for (std::size_t p = 0; p < map.size(); ++p) img.data[p] = to_byte(map[p]);
  if (!cv::imwrite(path.string(), img)) throw DataError("cannot write " + path.string());
}

void write_motion(const Tensor& motion, const fs::path& path) {
  if (motion.rank() != 3 || motion.dim(0) != 2) throw ShapeError("write_motion expects [2 x H x W]");
  const std::size_t h = motion.dim(1), w = motion.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "DBSGEN-MOTION 1 " << h << ' ' << w << '\n';
  std::vector<float> data(2 * h * w);
  for (std::size_t p = 0; p < h * w; ++p) {
    data[2 * p] = static_cast<float>(motion[p]);
    data[2 * p + 1] = static_cast<float>(motion[h * w + p]);
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw DataError("failed writing " + path.string());
}

Tensor read_motion(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream ss(line);
  std::string magic;
  int version = 0;
  std::size_t h = 0, w = 0;
  if (!(ss >> magic >> version >> h >> w) || magic != "DBSGEN-MOTION" || version != 1) {
    throw DataError("malformed motion file " + path.string());
  }
  std::vector<float> data(2 * h * w);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw DataError("truncated motion file " + path.string());
  Tensor m(Shape{2, h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    m[p] = data[2 * p];
    m[h * w + p] = data[2 * p + 1];
  }
  return m;
}

}  // namespace dbsgen::io
