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

#include "protoeval/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "protoeval/errors.h"

namespace protoeval {
namespace {

using nlohmann::json;

json metadata_to_json(const RunMetadata& m, bool with_timestamps) {
  json j = {
      {"label", m.label},         {"dataset", m.dataset},
      {"model_kind", m.model_kind}, {"grouping", m.grouping},
      {"config_hash", m.config_hash}, {"seed", m.seed},
      {"suites", m.suites},
  };
  if (with_timestamps) {
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
  }
  return j;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const MetricResult* MetricReport::find(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

std::pair<double, double> aggregate(std::span<const double> values) {
  if (values.empty()) throw ValidationError("aggregate of an empty value list");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

void finalize(MetricResult& metric) {
  if (metric.values.empty()) {
    metric.mean.reset();
    metric.stddev.reset();
    return;
  }
  std::vector<double> v;
  v.reserve(metric.values.size());
  for (const auto& e : metric.values) v.push_back(e.value);
  const auto [mean, sd] = aggregate(v);
  metric.mean = mean;
  metric.stddev = sd;
}

std::string report_to_json(const MetricReport& report, bool with_timestamps) {
  json metrics = json::array();
  for (const auto& m : report.metrics) {
    json values = json::array();
    for (const auto& v : m.values) values.push_back({{"entity", v.entity}, {"value", v.value}});
    json skipped = json::array();
    for (const auto& s : m.skipped) {
      skipped.push_back({{"entity", s.entity}, {"reason", s.reason}});
    }
    metrics.push_back({{"name", m.name},
                       {"suite", m.suite},
                       {"mean", optional_number(m.mean)},
                       {"std", optional_number(m.stddev)},
                       {"count", m.values.size()},
                       {"values", values},
                       {"skipped", skipped}});
  }
  json root = {{"metadata", metadata_to_json(report.metadata, with_timestamps)},
               {"metrics", metrics}};
  return root.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  MetricReport r;
  try {
    const json root = json::parse(text);
    const json& md = root.at("metadata");
    r.metadata.label = md.at("label").get<std::string>();
    r.metadata.dataset = md.at("dataset").get<std::string>();
    r.metadata.model_kind = md.at("model_kind").get<std::string>();
    r.metadata.grouping = md.at("grouping").get<std::string>();
    r.metadata.config_hash = md.at("config_hash").get<std::string>();
    r.metadata.seed = md.at("seed").get<std::uint64_t>();
    r.metadata.suites = md.at("suites").get<std::vector<std::string>>();
    r.metadata.started_at = md.value("started_at", "");
    r.metadata.finished_at = md.value("finished_at", "");
    for (const auto& jm : root.at("metrics")) {
      MetricResult m;
      m.name = jm.at("name").get<std::string>();
      m.suite = jm.at("suite").get<std::string>();
      m.mean = read_optional(jm, "mean");
      m.stddev = read_optional(jm, "std");
      for (const auto& v : jm.at("values")) {
        m.values.push_back({v.at("entity").get<std::string>(), v.at("value").get<double>()});
      }
      for (const auto& s : jm.at("skipped")) {
        m.skipped.push_back(
            {s.at("entity").get<std::string>(), s.at("reason").get<std::string>()});
      }
      r.metrics.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string reports_to_csv(std::span<const MetricReport> reports) {
  std::ostringstream out;
  out << "label,metric,entity,value,status,reason\n";
  for (const auto& r : reports) {
    const std::string label = csv_field(r.metadata.label);
    for (const auto& m : r.metrics) {
      for (const auto& v : m.values) {
        out << label << ',' << csv_field(m.name) << ',' << csv_field(v.entity) << ','
            << format_double(v.value) << ",ok,\n";
      }
      for (const auto& s : m.skipped) {
        out << label << ',' << csv_field(m.name) << ',' << csv_field(s.entity)
            << ",,skipped," << csv_field(s.reason) << '\n';
      }
    }
  }
  return out.str();
}

MetricReport summarize_runs(std::span<const MetricReport> runs,
                            const std::string& grouping) {
  if (runs.empty()) throw ValidationError("no runs to summarize");
  if (grouping != "folds" && grouping != "seeds") {
    throw UsageError("grouping must be 'folds' or 'seeds'");
  }
  MetricReport out;
  out.metadata = runs.front().metadata;
  out.metadata.grouping = grouping;
  out.metadata.started_at.clear();
  out.metadata.finished_at.clear();
  for (const auto& first : runs.front().metrics) {
    MetricResult m;
    m.name = first.name;
    m.suite = first.suite;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const std::string entity = "run" + std::to_string(i);
      const MetricResult* rm = runs[i].find(first.name);
      if (rm && rm->mean) {
        m.values.push_back({entity, *rm->mean});
      } else {
        m.skipped.push_back({entity, "metric has no values in this run"});
      }
    }
    finalize(m);
    out.metrics.push_back(std::move(m));
  }
  return out;
}

const std::vector<MetricInfo>& metric_catalog() {
  using enum NormMode;
  static const std::vector<MetricInfo> catalog = {
      {"PLC_out", "completeness", true, kMaxAcrossModels, 0.0},
      {"PSC_out", "completeness", true, kFixedBounds, 1.0},
      {"PALC_out", "completeness", true, kFixedBounds, 1.0},
      {"PAC_out", "completeness", true, kFixedBounds, 1.0},
      {"VLC", "completeness", true, kFixedBounds, 1.0},
      {"VAC", "completeness", true, kFixedBounds, 1.0},
      {"PLC_conti", "continuity", true, kMaxAcrossModels, 0.0},
      {"PSC_conti", "continuity", true, kFixedBounds, 1.0},
      {"PALC_conti", "continuity", true, kFixedBounds, 1.0},
      {"PRC_conti", "continuity", true, kMaxAcrossModels, 0.0},
      {"PAC_conti", "continuity", true, kFixedBounds, 1.0},
      {"CAC", "continuity", true, kFixedBounds, 1.0},
      {"CRC", "continuity", true, kMaxAcrossModels, 0.0},
      {"PLC_contra", "contrastivity", false, kMaxAcrossModels, 0.0},
      {"PALC_contra", "contrastivity", false, kFixedBounds, 1.0},
      {"APD_intra", "contrastivity", false, kFixedBounds, 2.0},
      {"AFD_intra", "contrastivity", false, kFixedBounds, 2.0},
      {"APD_inter", "contrastivity", false, kFixedBounds, 2.0},
      {"AFD_inter", "contrastivity", false, kFixedBounds, 2.0},
      {"Entropy", "contrastivity", true, kFixedBounds, std::numbers::ln10},
      {"ObjectOverlap", "complexity", false, kFixedBounds, 1.0},
      {"BackgroundOverlap", "complexity", true, kFixedBounds, 1.0},
      {"IORD", "complexity", false, kFixedBounds, 1.0},
      {"Consistency", "complexity", false, kFixedBounds, 1.0},
      {"GlobalSize", "compactness", true, kMaxAcrossModels, 0.0},
      {"Sparsity", "compactness", false, kFixedBounds, 1.0},
      {"NPR", "compactness", true, kMaxAcrossModels, 0.0},
      {"LocalSize", "compactness", true, kMaxAcrossModels, 0.0},
      {"Accuracy", "performance", false, kFixedBounds, 1.0},
      {"TopKAccuracy", "performance", false, kFixedBounds, 1.0},
      {"F1", "performance", false, kFixedBounds, 1.0},
  };
  return catalog;
}

const MetricInfo* find_metric_info(const std::string& name) {
  for (const auto& info : metric_catalog()) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

RadarAxis radar_normalize(const std::string& metric,
                          std::span<const double> values_by_model, NormMode mode,
                          double bound, bool invert) {
  RadarAxis axis;
  axis.metric = metric;
  axis.inverted = invert;
  axis.mode = mode;
  if (mode == NormMode::kFixedBounds) {
    if (!(bound > 0.0)) throw ValidationError("fixed bound must be positive for " + metric);
    axis.bound = bound;
  } else {
    if (values_by_model.empty()) {
      throw ValidationError("max normalisation needs at least one model for " + metric);
    }
    axis.bound = *std::max_element(values_by_model.begin(), values_by_model.end());
    axis.zero_max = !(axis.bound > 0.0);
  }
  for (double v : values_by_model) {
    if (axis.zero_max) {
      axis.normalized.push_back(0.0);
      continue;
    }
    const double n = std::clamp(v / axis.bound, 0.0, 1.0);
    axis.normalized.push_back(invert ? invert_axis_value(n) : n);
  }
  return axis;
}

std::vector<RadarSpec> build_radar(std::span<const MetricReport> models, bool force_max) {
  if (models.empty()) throw ValidationError("radar needs at least one model");
  std::vector<RadarSpec> specs;
  std::map<std::string, std::size_t> group_index;
  for (const auto& info : metric_catalog()) {
    const bool present = std::any_of(models.begin(), models.end(), [&](const auto& r) {
      return r.find(info.name) != nullptr;
    });
    if (!present) continue;
    auto [it, inserted] = group_index.emplace(info.suite, specs.size());
    if (inserted) {
      RadarSpec spec;
      spec.group = info.suite;
      for (const auto& r : models) spec.models.push_back(r.metadata.label);
      specs.push_back(std::move(spec));
    }
    std::vector<double> values;
    for (const auto& r : models) {
      const MetricResult* m = r.find(info.name);
      values.push_back(m && m->mean ? *m->mean : 0.0);
    }
    const NormMode mode = force_max ? NormMode::kMaxAcrossModels : info.mode;
    specs[it->second].axes.push_back(
        radar_normalize(info.name, values, mode, info.bound, info.lower_is_better));
  }
  return specs;
}

std::string radar_to_svg(const RadarSpec& spec) {
  const double cx = kRadarCenter, cy = kRadarCenter, r = kRadarRadius;
  const std::size_t n = spec.axes.size();
  const auto angle = [&](std::size_t i) {
    return -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(n);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" "
         "viewBox=\"0 0 500 500\" data-group=\""
      << xml_escape(spec.group) << "\">\n"
      << "  <title>" << xml_escape(spec.group) << "</title>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ax = spec.axes[i];
    const double x = cx + r * std::cos(angle(i)), y = cy + r * std::sin(angle(i));
    svg << "  <line class=\"axis\" data-metric=\"" << xml_escape(ax.metric)
        << "\" data-inverted=\"" << (ax.inverted ? "true" : "false") << "\" data-mode=\""
        << (ax.mode == NormMode::kFixedBounds ? "fixed" : "max") << "\" data-bound=\""
        << format_double(ax.bound) << "\" x1=\"" << format_coord(cx) << "\" y1=\""
        << format_coord(cy) << "\" x2=\"" << format_coord(x) << "\" y2=\""
        << format_coord(y) << "\" stroke=\"#999\"/>\n";
    const double lx = cx + (r + 24.0) * std::cos(angle(i));
    const double ly = cy + (r + 24.0) * std::sin(angle(i));
    svg << "  <text x=\"" << format_coord(lx) << "\" y=\"" << format_coord(ly)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << xml_escape(ax.metric)
        << (ax.inverted ? " (inv)" : "") << "</text>\n";
  }
  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    svg << "  <polygon class=\"model\" data-model=\"" << xml_escape(spec.models[m])
        << "\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      const double v = spec.axes[i].normalized[m];
      if (i) svg << ' ';
      svg << format_coord(cx + r * v * std::cos(angle(i))) << ','
          << format_coord(cy + r * v * std::sin(angle(i)));
    }
    const char* color = kColors[m % std::size(kColors)];
    svg << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"" << color
        << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "svg") return ReportFormat::kSvg;
  throw UsageError("unknown report format '" + text + "' (expected json, csv or svg)");
}

}  // namespace protoeval
