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

#include "dbsgen/eval/metrics.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dbsgen/error.hpp"
#include "io/json_fields.hpp"

namespace dbsgen::eval {

using io::Label;
using detail_json = io::detail::Json;

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  ignored += o.ignored;
  return *this;
}

ConfusionCounts compare_masks(const std::vector<segmentation::Mask>& predicted,
                              const std::vector<io::LabelMap>& ground_truth, std::size_t first, std::size_t last) {
  if (predicted.size() != ground_truth.size()) {
    throw DataError("cannot compare " + std::to_string(predicted.size()) + " masks with " +
                    std::to_string(ground_truth.size()) + " ground-truth frames");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const segmentation::Mask& m = predicted[i];
    const io::LabelMap& g = ground_truth[i];
    if (m.height != g.height || m.width != g.width) {
      throw DataError("frame " + std::to_string(i + 1) + ": mask is " + std::to_string(m.height) + "x" +
                      std::to_string(m.width) + ", ground truth is " + std::to_string(g.height) + "x" +
                      std::to_string(g.width));
    }
    const std::size_t frame = i + 1;
    if (frame < first || frame > last) {
      c.ignored += m.values.size();
      continue;
    }
    for (std::size_t p = 0; p < m.values.size(); ++p) {
      const bool set = m.values[p] != 0;
      switch (g.values[p]) {
        case Label::moving:
          ++(set ? c.tp : c.fn);
          break;
        case Label::static_bg:
        case Label::shadow:
          ++(set ? c.fp : c.tn);
          break;
        case Label::outside_roi:
        case Label::unknown:
          ++c.ignored;
          break;
      }
    }
  }
  return c;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

Scores f_measure(const ConfusionCounts& c) {
  Scores s;
  const auto tp = static_cast<double>(c.tp);
  s.precision = ratio(tp, tp + static_cast<double>(c.fp));
  s.recall = ratio(tp, tp + static_cast<double>(c.fn));
  s.f_measure = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

MetricsReport aggregate_report(std::vector<VideoMetrics> videos, RunMetadata metadata) {
  if (videos.empty()) throw ArgumentError("cannot aggregate an empty list of videos");
  MetricsReport r;
  double sum = 0.0;
  for (const VideoMetrics& v : videos) sum += v.scores.f_measure;
  r.average_f_measure = sum / static_cast<double>(videos.size());
  r.videos = std::move(videos);
  r.metadata = std::move(metadata);
  return r;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string report_json(const MetricsReport& report) {
  detail_json j;
  j["average_f_measure"] = report.average_f_measure;
  detail_json videos = detail_json::array();
  for (const VideoMetrics& v : report.videos) {
    videos.push_back({{"name", v.name},
                      {"tp", v.counts.tp},
                      {"fp", v.counts.fp},
                      {"fn", v.counts.fn},
                      {"tn", v.counts.tn},
                      {"ignored", v.counts.ignored},
                      {"precision", v.scores.precision},
                      {"recall", v.scores.recall},
                      {"f_measure", v.scores.f_measure}});
  }
  j["videos"] = videos;
  j["metadata"] = {{"config_hash", report.metadata.config_hash},
                   {"seed", report.metadata.seed},
                   {"started", report.metadata.started},
                   {"finished", report.metadata.finished},
                   {"flags", report.metadata.flags}};
  return j.dump(2) + "\n";
}

MetricsReport parse_report_json(const std::string& json) {
  try {
    const detail_json j = detail_json::parse(json);
    MetricsReport r;
    r.average_f_measure = j.at("average_f_measure").get<double>();
    for (const auto& v : j.at("videos")) {
      VideoMetrics m;
      m.name = v.at("name").get<std::string>();
      m.counts.tp = v.at("tp").get<std::uint64_t>();
      m.counts.fp = v.at("fp").get<std::uint64_t>();
      m.counts.fn = v.at("fn").get<std::uint64_t>();
      m.counts.tn = v.at("tn").get<std::uint64_t>();
      m.counts.ignored = v.at("ignored").get<std::uint64_t>();
      m.scores = f_measure(m.counts);
      r.videos.push_back(std::move(m));
    }
    const auto& meta = j.at("metadata");
    r.metadata.config_hash = meta.at("config_hash").get<std::string>();
    r.metadata.seed = meta.at("seed").get<std::uint64_t>();
    r.metadata.started = meta.at("started").get<std::string>();
    r.metadata.finished = meta.at("finished").get<std::string>();
    r.metadata.flags = meta.at("flags").get<std::map<std::string, std::string>>();
    return r;
  } catch (const detail_json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string report_table(const MetricsReport& report) {
  std::size_t width = 7;
  for (const VideoMetrics& v : report.videos) width = std::max(width, v.name.size());
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& p, const std::string& r, const std::string& f) {
    out << name << std::string(width - name.size() + 2, ' ') << p << "  " << r << "  " << f << '\n';
  };
  row("video", "precision", "recall   ", "f_measure");
  for (const VideoMetrics& v : report.videos) {
    row(v.name, format_fixed(v.scores.precision, 4) + "   ", format_fixed(v.scores.recall, 4) + "   ",
        format_fixed(v.scores.f_measure, 4));
  }
  row("average", "         ", "         ", format_fixed(report.average_f_measure, 4));
  out << "config " << report.metadata.config_hash << "  seed " << report.metadata.seed << '\n';
  return out.str();
}

void write_report(const MetricsReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::ofstream json(directory / "report.json");
  json << report_json(report);
  std::ofstream table(directory / "report.txt");
  table << report_table(report);
  if (!json || !table) throw DataError("cannot write report into " + directory.string());
}

MetricsReport read_report(const std::filesystem::path& directory) {
  std::ifstream in(directory / "report.json");
  if (!in) throw DataError("no report.json in " + directory.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report_json(ss.str());
}

std::string timestamp_now() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dbsgen::eval
