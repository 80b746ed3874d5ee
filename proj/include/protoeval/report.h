// Copyright 2026 The protoeval Authors
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

#ifndef PROTOEVAL_REPORT_H_
#define PROTOEVAL_REPORT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace protoeval {

struct MetricValue {
  std::string entity;
  double value = 0.0;
  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct SkippedEntity {
  std::string entity;
  std::string reason;
  friend bool operator==(const SkippedEntity&, const SkippedEntity&) = default;
};

// One metric of one run. mean/stddev cover `values` only and are empty when
// every entity was skipped.
struct MetricResult {
  std::string name;
  std::string suite;
  std::vector<MetricValue> values;
  std::vector<SkippedEntity> skipped;
  std::optional<double> mean;
  std::optional<double> stddev;
  friend bool operator==(const MetricResult&, const MetricResult&) = default;
};

struct RunMetadata {
  std::string label;          // model / run label used on radar plots
  std::string dataset;
  std::string model_kind;
  std::string grouping = "single";  // "single", "folds" or "seeds"
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> suites;
  std::string started_at;
  std::string finished_at;
  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct MetricReport {
  RunMetadata metadata;
  std::vector<MetricResult> metrics;

  const MetricResult* find(const std::string& name) const;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Arithmetic mean and population (divisor N) standard deviation. Throws
// ValidationError on an empty input.
std::pair<double, double> aggregate(std::span<const double> values);

// Fills mean/stddev of every metric from its stored values.
void finalize(MetricResult& metric);

// Canonical JSON (sorted keys, shortest round-trip doubles).
std::string report_to_json(const MetricReport& report, bool with_timestamps = true);
MetricReport report_from_json(const std::string& text);

// Header "label,metric,entity,value,status,reason" then one row per stored
// value and per skipped entity of every report.
std::string reports_to_csv(std::span<const MetricReport> reports);

// Folds repeated runs of one model into a report whose entities are the runs
// and whose values are the per-run means. `grouping` labels what the runs
// are ("folds" or "seeds").
MetricReport summarize_runs(std::span<const MetricReport> runs,
                            const std::string& grouping);

// --- Radar -----------------------------------------------------------------

enum class NormMode { kFixedBounds, kMaxAcrossModels };

struct MetricInfo {
  std::string name;
  std::string suite;
  bool lower_is_better = false;
  NormMode mode = NormMode::kMaxAcrossModels;
  double bound = 0.0;  // used by kFixedBounds
};

// Every metric run_suite can emit, in emission order.
const std::vector<MetricInfo>& metric_catalog();
const MetricInfo* find_metric_info(const std::string& name);

struct RadarAxis {
  std::string metric;
  bool inverted = false;
  NormMode mode = NormMode::kFixedBounds;
  double bound = 0.0;              // fixed bound, or the max that was used
  bool zero_max = false;           // max-mode with a nonpositive maximum
  std::vector<double> normalized;  // per model, in [0, 1]
};

// Fixed bounds: clamp(v / bound, 0, 1). Max mode: v / max over models, clamped
// to [0, 1]. Inverted axes store 1 - normalized. A nonpositive maximum maps
// every model to 0 (inverted or not) and sets zero_max.
RadarAxis radar_normalize(const std::string& metric,
                          std::span<const double> values_by_model, NormMode mode,
                          double bound, bool invert);

inline double invert_axis_value(double normalized) { return 1.0 - normalized; }

struct RadarSpec {
  std::string group;
  std::vector<std::string> models;
  std::vector<RadarAxis> axes;
};

// One radar chart per suite present in the reports. Each report is one model; its
// metric means are the plotted values (a missing mean counts as 0). When
// force_max is set every axis uses max mode.
std::vector<RadarSpec> build_radar(std::span<const MetricReport> models,
                                   bool force_max = false);

// Standalone SVG: one <line class="axis" data-metric=..> per axis and one
// <polygon class="model" data-model=..> per model whose vertex radii are the
// normalized values times kRadarRadius.
inline constexpr double kRadarRadius = 180.0;
inline constexpr double kRadarCenter = 250.0;
std::string radar_to_svg(const RadarSpec& spec);

// Output format selector for emit_report. Throws UsageError on anything but
// "json", "csv" or "svg".
enum class ReportFormat { kJson, kCsv, kSvg };
ReportFormat parse_report_format(const std::string& text);

}  // namespace protoeval

#endif  // PROTOEVAL_REPORT_H_
