// Copyright 2026 The gcomm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Read-side reports over finished or running run directories: attention
// tables for logged episodes and plot-ready metric exports.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "gcomm/env/record.hpp"
#include "gcomm/error.hpp"
#include "gcomm/metrics/metrics.hpp"
#include "gcomm/trainer/trainer.hpp"

namespace gcomm {

inline std::size_t argmax_cell(const std::array<double, kNumCells>& a) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < a.size(); ++c) {
    if (a[c] > a[best]) best = c;
  }
  return best;
}

/// Per-step 4x4 attention tables; the argmax cell is bracketed.
inline std::string attention_table(const EpisodeRecord& r) {
  if (r.attention.empty()) throw Error(ErrorCode::kMissingData, "record has no attention");
  if (r.attention.size() > r.frames.size()) {
    throw Error(ErrorCode::kInvalidArgument, "more attention maps than frames");
  }
  std::ostringstream out;
  out << "instruction: " << r.instruction << "  success: " << (r.success ? "yes" : "no")
      << '\n';
  char buf[32];
  for (std::size_t t = 0; t < r.attention.size(); ++t) {
    const auto& a = r.attention[t];
    const std::size_t best = argmax_cell(a);
    const int target = r.frames[t].target.cell();
    double sum = 0.0;
    for (double v : a) sum += v;
    std::snprintf(buf, sizeof buf, "%.6f", sum);
    out << "step " << t << "  argmax " << best << "  target " << target
        << "  on_target " << (static_cast<int>(best) == target ? "yes" : "no") << "  sum " << buf
        << '\n';
    for (int row = 0; row < kGridSize; ++row) {
      for (int col = 0; col < kGridSize; ++col) {
        const std::size_t c = static_cast<std::size_t>(row * kGridSize + col);
        std::snprintf(buf, sizeof buf, c == best ? "[%.4f]" : " %.4f ", a[c]);
        out << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<MetricRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kMetricsHeader) throw Error(ErrorCode::kParse, path.string() + ": bad header");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no));
    }
    try {
      rows.push_back({f[0], std::stoull(f[1]), std::stoull(f[2]), f[3], std::stod(f[4])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no));
    }
  }
  return rows;
}

/// Every directory at or below `root` that holds a metrics.csv, sorted.
inline std::vector<std::filesystem::path> find_run_dirs(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(ErrorCode::kMissingData, "no run dir " + root.string());
  std::vector<fs::path> out;
  if (fs::exists(root / "metrics.csv")) out.push_back(root);
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "metrics.csv")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct AggregateRow {
  std::string run;
  std::size_t episode = 0;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 for a single seed
};

inline std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.run, r.metric, r.episode}].push_back(r.value);
  std::vector<AggregateRow> out;
  for (const auto& [key, v] : groups) {
    AggregateRow a{std::get<0>(key), std::get<2>(key), std::get<1>(key), v.size(), 0.0, 0.0};
    for (double x : v) a.mean += x;
    a.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - a.mean) * (x - a.mean);
      a.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline constexpr const char* kAggregateHeader = "run,episode,metric,n,mean,sd";

inline std::string csv_line(const AggregateRow& a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", a.n, a.mean, a.sd);
  return a.run + "," + std::to_string(a.episode) + "," + a.metric + "," + buf;
}

struct ScatterPoint {
  std::string run;
  std::uint64_t seed = 0;
  double topsim = 0.0;
  double zero_shot = 0.0;
};

inline constexpr const char* kScatterHeader = "run,seed,topsim,zero_shot";

/// (topsim, zero-shot) per run directory whose summary has both.
inline std::vector<ScatterPoint> scatter_points(const std::vector<std::filesystem::path>& dirs) {
  std::vector<ScatterPoint> out;
  for (const auto& d : dirs) {
    const auto file = d / "summary.json";
    if (!std::filesystem::exists(file)) continue;
    const auto j = read_json_file(file.string());
    if (!j.contains("topsim") || !j.contains("zero_shot") || j["topsim"].is_null() ||
        j["zero_shot"].is_null()) {
      continue;
    }
    out.push_back({j.at("run").get<std::string>(), j.at("seed").get<std::uint64_t>(),
                   j["topsim"].get<double>(), j["zero_shot"].get<double>()});
  }
  return out;
}

inline std::optional<double> scatter_pearson(const std::vector<ScatterPoint>& pts) {
  std::vector<double> x, y;
  for (const auto& p : pts) {
    x.push_back(p.topsim);
    y.push_back(p.zero_shot);
  }
  return pearson(x, y);
}

struct MetricsExport {
  std::vector<MetricRow> tidy;
  std::vector<AggregateRow> aggregate;
  std::vector<ScatterPoint> scatter;
  std::optional<double> scatter_r;
};

inline MetricsExport export_metrics(const std::vector<std::filesystem::path>& roots) {
  MetricsExport e;
  std::vector<std::filesystem::path> dirs;
  for (const auto& root : roots) {
    for (auto& d : find_run_dirs(root)) dirs.push_back(std::move(d));
  }
  for (const auto& d : dirs) {
    for (auto& r : read_metrics_csv(d / "metrics.csv")) e.tidy.push_back(std::move(r));
  }
  e.aggregate = aggregate(e.tidy);
  e.scatter = scatter_points(dirs);
  e.scatter_r = scatter_pearson(e.scatter);
  return e;
}

/// Writes tidy.csv, aggregate.csv and scatter.csv into `out`.
inline void write_export(const MetricsExport& e, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  auto open = [&](const char* name) {
    std::ofstream f(out / name, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + (out / name).string());
    return f;
  };
  {
    auto f = open("tidy.csv");
    f << kMetricsHeader << '\n';
    for (const auto& r : e.tidy) f << csv_line(r) << '\n';
  }
  {
    auto f = open("aggregate.csv");
    f << kAggregateHeader << '\n';
    for (const auto& a : e.aggregate) f << csv_line(a) << '\n';
  }
  auto f = open("scatter.csv");
  f << kScatterHeader << '\n';
  char buf[64];
  for (const auto& p : e.scatter) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", p.topsim, p.zero_shot);
    f << p.run << ',' << p.seed << ',' << buf << '\n';
  }
}

}  // namespace gcomm
