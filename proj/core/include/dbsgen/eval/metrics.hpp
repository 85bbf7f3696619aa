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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dbsgen/io/dataset.hpp"
#include "dbsgen/segmentation/segmentation.hpp"

namespace dbsgen::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  std::uint64_t ignored = 0;

  std::uint64_t total() const { return tp + fp + fn + tn + ignored; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Counts over frames first..last (1-based, inclusive) of the aligned lists.
/// Moving is positive, static and shadow negative; outside-ROI, unknown and
/// out-of-range frames are ignored. Throws DataError when list lengths or
/// frame sizes differ.
ConfusionCounts compare_masks(const std::vector<segmentation::Mask>& predicted,
                              const std::vector<io::LabelMap>& ground_truth, std::size_t first, std::size_t last);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

/// Precision, recall and their harmonic mean; every 0/0 is 0.
Scores f_measure(const ConfusionCounts& counts);

struct VideoMetrics {
  std::string name;
  ConfusionCounts counts;
  Scores scores;
};

struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> flags;
};

struct MetricsReport {
  std::vector<VideoMetrics> videos;
  double average_f_measure = 0.0;
  RunMetadata metadata;
};

/// Unweighted mean F-measure over videos. Throws ArgumentError when empty.
MetricsReport aggregate_report(std::vector<VideoMetrics> videos, RunMetadata metadata = {});

/// Fixed-point text with `decimals` digits.
std::string format_fixed(double value, int decimals);

std::string report_json(const MetricsReport& report);
std::string report_table(const MetricsReport& report);
MetricsReport parse_report_json(const std::string& json);

/// Writes report.json and report.txt into `directory`.
void write_report(const MetricsReport& report, const std::filesystem::path& directory);
MetricsReport read_report(const std::filesystem::path& directory);

/// UTC ISO-8601 time; SOURCE_DATE_EPOCH, when set, replaces the clock.
std::string timestamp_now();

}  // namespace dbsgen::eval
