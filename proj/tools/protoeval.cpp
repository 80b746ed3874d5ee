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

// Command-line front end: validate bundles, generate perturbed inputs, run
// metric suites, emit reports and compute dataset splits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "protoeval/errors.h"
#include "protoeval/interchange.h"
#include "protoeval/proto_kernel.h"
#include "protoeval/report.h"
#include "protoeval/splits.h"
#include "protoeval/suite.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

// Stored scores must be reproducible from stored feature maps to this
// tolerance (float32 export plus summation order).
constexpr double kRegenerationTolerance = 1e-4;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw protoeval::IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw protoeval::IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw protoeval::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw protoeval::IoError("failed writing " + path.string());
}

std::set<protoeval::Suite> parse_suite_list(const std::string& text) {
  std::set<protoeval::Suite> out;
  if (text == "all") {
    for (auto s : protoeval::all_suites()) out.insert(s);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(protoeval::parse_suite(item));
  if (out.empty()) throw protoeval::UsageError("empty suite list");
  return out;
}

protoeval::SuiteConfig config_from(const std::string& path) {
  return path.empty() ? protoeval::parse_suite_config("{}")
                      : protoeval::load_suite_config(path);
}

int cmd_validate(const std::string& manifest) {
  const auto dataset = protoeval::load_bundle(manifest);
  std::vector<std::string> violations;
  for (const auto& s : dataset.samples) {
    const double err = protoeval::regeneration_error(dataset.model, s);
    if (err > kRegenerationTolerance) {
      violations.push_back(s.sample_id + ": similarity scores differ from regenerated values by " +
                           std::to_string(err));
    }
  }
  if (!violations.empty()) throw protoeval::BundleValidationError(std::move(violations));
  std::cout << "ok: " << dataset.samples.size() << " samples, "
            << dataset.model.prototype_count() << " prototypes, "
            << dataset.model.class_count() << " classes\n";
  return kExitOk;
}

json box_json(const protoeval::BoundingBox& b) {
  return {b.row0, b.col0, b.row1, b.col1};
}

int cmd_perturb(const std::string& manifest, const std::string& out_dir,
                const std::string& config_path, const std::string& suites) {
  const auto dataset = protoeval::load_bundle(manifest);
  auto cfg = config_from(config_path);
  cfg.suites = parse_suite_list(suites);
  cfg.suites.erase(protoeval::Suite::kContrastivity);
  cfg.suites.erase(protoeval::Suite::kComplexity);
  cfg.suites.erase(protoeval::Suite::kCompactness);
  cfg.suites.erase(protoeval::Suite::kPerformance);

  std::vector<protoeval::SkippedEntity> skipped;
  const auto records = protoeval::generate_perturbations(dataset, cfg, &skipped);
  json entries = json::array();
  for (const auto& r : records) {
    std::string dir = protoeval::to_string(r.kind);
    if (r.prototype) dir += "_p" + std::to_string(*r.prototype);
    const fs::path rel = fs::path(r.sample_id) / dir / "image.qpt";
    fs::create_directories((fs::path(out_dir) / rel).parent_path());
    protoeval::write_tensor(protoeval::tensor_from(r.image), fs::path(out_dir) / rel);
    json e = {{"sample_id", r.sample_id},
              {"kind", protoeval::to_string(r.kind)},
              {"seed", r.seed},
              {"image", rel.generic_string()}};
    e["prototype"] = r.prototype ? json(*r.prototype) : json(nullptr);
    e["box"] = r.box ? box_json(*r.box) : json(nullptr);
    entries.push_back(std::move(e));
  }
  json skipped_json = json::array();
  for (const auto& s : skipped) skipped_json.push_back({{"entity", s.entity}, {"reason", s.reason}});
  const json index = {{"format_version", 1},
                      {"manifest", fs::absolute(manifest).generic_string()},
                      {"config_hash", protoeval::config_hash(cfg)},
                      {"seed", cfg.perturbation.seed},
                      {"entries", entries},
                      {"skipped", skipped_json}};
  write_text(fs::path(out_dir) / "perturbations.json", index.dump(2) + "\n");
  std::cout << records.size() << " perturbed inputs written, " << skipped.size()
            << " skipped\n";
  return kExitOk;
}

int cmd_metrics(const std::string& suites, const std::string& manifest,
                const std::string& config_path, const std::string& out,
                std::size_t parallelism, const std::string& label) {
  const auto dataset = protoeval::load_bundle(manifest);
  auto cfg = config_from(config_path);
  cfg.suites = parse_suite_list(suites);
  if (parallelism > 0) cfg.parallelism = parallelism;
  if (!label.empty()) cfg.label = label;
  const auto report = protoeval::run_suite(dataset, cfg);
  const std::string text = protoeval::report_to_json(report);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format,
               const std::string& out, const std::string& grouping, bool radar_max) {
  const auto fmt = protoeval::parse_report_format(format);
  std::vector<protoeval::MetricReport> reports;
  for (const auto& p : inputs) reports.push_back(protoeval::report_from_json(read_text(p)));

  // Runs sharing a label are repeated runs of one model.
  std::vector<std::string> labels;
  std::map<std::string, std::vector<protoeval::MetricReport>> by_label;
  for (const auto& r : reports) {
    if (!by_label.count(r.metadata.label)) labels.push_back(r.metadata.label);
    by_label[r.metadata.label].push_back(r);
  }
  std::vector<protoeval::MetricReport> models;
  for (const auto& l : labels) {
    const auto& runs = by_label[l];
    models.push_back(runs.size() == 1 ? runs.front()
                                      : protoeval::summarize_runs(runs, grouping));
  }

  switch (fmt) {
    case protoeval::ReportFormat::kJson: {
      std::string text;
      if (models.size() == 1) {
        text = protoeval::report_to_json(models.front());
      } else {
        json arr = json::array();
        for (const auto& m : models) arr.push_back(json::parse(protoeval::report_to_json(m)));
        text = arr.dump(2) + "\n";
      }
      if (out.empty() || out == "-") {
        std::cout << text;
      } else {
        write_text(out, text);
      }
      break;
    }
    case protoeval::ReportFormat::kCsv: {
      const std::string text = protoeval::reports_to_csv(reports);
      if (out.empty() || out == "-") {
        std::cout << text;
      } else {
        write_text(out, text);
      }
      break;
    }
    case protoeval::ReportFormat::kSvg: {
      if (out.empty()) throw protoeval::UsageError("svg output needs --out <directory>");
      for (const auto& spec : protoeval::build_radar(models, radar_max)) {
        write_text(fs::path(out) / ("radar_" + spec.group + ".svg"),
                   protoeval::radar_to_svg(spec));
      }
      break;
    }
  }
  return kExitOk;
}

struct LabelSource {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

LabelSource labels_from(const std::string& path) {
  LabelSource src;
  if (fs::path(path).extension() == ".json") {
    json j;
    try {
      j = json::parse(read_text(path));
    } catch (const json::exception& e) {
      throw protoeval::ManifestError(path + ": " + e.what());
    }
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) {
        src.ids.push_back(std::to_string(i));
        src.labels.push_back(j[i].get<int>());
      }
      return src;
    }
  }
  const auto dataset = protoeval::load_bundle(path);
  for (const auto& s : dataset.samples) {
    src.ids.push_back(s.sample_id);
    src.labels.push_back(s.labels.front());
  }
  return src;
}

json ids_json(const std::vector<std::size_t>& idx, const std::vector<std::string>& ids) {
  json arr = json::array();
  for (std::size_t i : idx) arr.push_back(ids[i]);
  return arr;
}

int cmd_split(const std::string& method, const std::string& input, std::uint64_t seed,
              const std::string& out, double test_fraction, std::size_t folds) {
  json result;
  if (method == "stratified") {
    const auto src = labels_from(input);
    const auto split = protoeval::stratified_splits(src.labels, seed, test_fraction, folds);
    json folds_json = json::array();
    for (const auto& f : split.folds) {
      folds_json.push_back({{"train", ids_json(f.train, src.ids)},
                            {"val", ids_json(f.val, src.ids)}});
    }
    result = {{"method", "stratified"},
              {"seed", seed},
              {"test", ids_json(split.test, src.ids)},
              {"folds", folds_json}};
  } else if (method == "hsv") {
    const auto dataset = protoeval::load_bundle(input);
    std::vector<protoeval::Image> images;
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (const auto& s : dataset.samples) {
      images.push_back(s.image);
      labels.push_back(s.labels.front());
      ids.push_back(s.sample_id);
    }
    protoeval::HsvSplitConfig hcfg;
    hcfg.fallback_test_fraction = test_fraction;
    const auto split = protoeval::hsv_context_split(images, labels, seed, hcfg);
    result = {{"method", "hsv"},
              {"seed", seed},
              {"trainval", ids_json(split.trainval, ids)},
              {"test", ids_json(split.test, ids)},
              {"fallback_classes", split.fallback_classes}};
  } else {
    throw protoeval::UsageError("split method must be 'stratified' or 'hsv'");
  }
  const std::string text = result.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return kExitOk;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluation toolkit for part-based prototype models"};
  app.require_subcommand(1);

  std::string manifest, out, config_path, suites = "all", label, format, grouping = "folds";
  std::string method;
  std::vector<std::string> inputs;
  std::size_t parallelism = 0, folds = 4;
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  bool radar_max = false;

  auto* validate = app.add_subcommand("validate", "Check a bundle against every invariant");
  validate->add_option("manifest", manifest, "Manifest path")->required();

  auto* perturb = app.add_subcommand("perturb", "Write perturbed inputs for the adapter");
  perturb->add_option("manifest", manifest, "Manifest path")->required();
  perturb->add_option("--out", out, "Output directory")->required();
  perturb->add_option("--config", config_path, "Suite config (JSON)");
  perturb->add_option("--suite", suites, "completeness, continuity or all");

  auto* metrics = app.add_subcommand("metrics", "Run metric suites and write a report");
  metrics->add_option("suite", suites, "Suite name, comma list, or 'all'")->required();
  metrics->add_option("manifest", manifest, "Manifest path")->required();
  metrics->add_option("--config", config_path, "Suite config (JSON)");
  metrics->add_option("--out", out, "Report path (default stdout)");
  metrics->add_option("--parallelism", parallelism, "Worker threads (overrides config)");
  metrics->add_option("--label", label, "Model label recorded in the report");

  auto* report = app.add_subcommand("report", "Re-emit reports as JSON, CSV or SVG radar");
  report->add_option("reports", inputs, "Report JSON files")->required();
  report->add_option("--format", format, "json, csv or svg")->required();
  report->add_option("--out", out, "Output file (json/csv) or directory (svg)");
  report->add_option("--grouping", grouping, "What repeated runs are: folds or seeds");
  report->add_flag("--radar-max", radar_max, "Normalise every radar axis by the model maximum");

  auto* split = app.add_subcommand("split", "Compute dataset splits");
  split->add_option("method", method, "stratified or hsv")->required();
  split->add_option("input", manifest, "Manifest, or a JSON label array for stratified")
      ->required();
  split->add_option("--seed", seed, "Split seed");
  split->add_option("--out", out, "Output JSON (default stdout)");
  split->add_option("--test-fraction", test_fraction, "Held-out fraction");
  split->add_option("--folds", folds, "Number of folds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(manifest);
    if (*perturb) return cmd_perturb(manifest, out, config_path, suites);
    if (*metrics) return cmd_metrics(suites, manifest, config_path, out, parallelism, label);
    if (*report) return cmd_report(inputs, format, out, grouping, radar_max);
    if (*split) return cmd_split(method, manifest, seed, out, test_fraction, folds);
  } catch (const protoeval::BundleValidationError& e) {
    std::cerr << "validation failed with " << e.violations().size() << " violation(s):\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kExitValidation;
  } catch (const protoeval::UsageError& e) {
    return report_error(e, kExitUsage);
  } catch (const protoeval::IoError& e) {
    return report_error(e, kExitIo);
  } catch (const protoeval::ManifestError& e) {
    return report_error(e, kExitIo);
  } catch (const protoeval::FormatError& e) {
    return report_error(e, kExitIo);
  } catch (const protoeval::Error& e) {
    return report_error(e, kExitValidation);
  }
  return kExitUsage;
}
