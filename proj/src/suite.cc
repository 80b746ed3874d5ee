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

#include "protoeval/suite.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "protoeval/metrics_change.h"
#include "protoeval/metrics_ground.h"
#include "protoeval/metrics_space.h"
#include "protoeval/proto_kernel.h"

namespace protoeval {
namespace {

using nlohmann::json;

struct Outcome {
  std::string metric;
  std::string entity;
  std::optional<double> value;
  std::string reason;
};
using Outcomes = std::vector<Outcome>;

template <typename Fn>
void record(Outcomes& out, const char* metric, const std::string& entity, Fn&& fn) {
  try {
    const double v = fn();
    if (std::isfinite(v)) {
      out.push_back({metric, entity, v, {}});
    } else {
      out.push_back({metric, entity, std::nullopt, "non-finite value"});
    }
  } catch (const Error& e) {
    out.push_back({metric, entity, std::nullopt, e.what()});
  }
}

void skip_all(Outcomes& out, std::initializer_list<const char*> metrics,
              const std::string& entity, const std::string& reason) {
  for (const char* m : metrics) out.push_back({m, entity, std::nullopt, reason});
}

std::string proto_entity(const std::string& sample_id, std::size_t p) {
  return sample_id + "/p" + std::to_string(p);
}

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const Map2d& map_of(const ForwardArtifacts& a, std::size_t p) {
  if (p >= a.similarity_maps.size()) {
    throw MissingArtifactError("no similarity map for prototype " + std::to_string(p));
  }
  return a.similarity_maps[p];
}

double score_of(const ForwardArtifacts& a, std::size_t p) {
  if (p >= a.similarity_scores.size()) {
    throw MissingArtifactError("no similarity score for prototype " + std::to_string(p));
  }
  return a.similarity_scores[p];
}

const std::vector<double>& output_of(const ForwardArtifacts& a) {
  if (a.output.empty()) throw MissingArtifactError("model output missing");
  return a.output;
}

BoundingBox percentile_box(const Map2d& saliency, double percentile) {
  return bounding_box(percentile_mask(saliency, percentile));
}

std::vector<std::size_t> top_ids(const SampleBundle& s, std::size_t k) {
  return top_prototypes(s.forward.similarity_scores, k).ids;
}

void note_shortfall(Outcomes& out, std::initializer_list<const char*> metrics,
                    const SampleBundle& s, std::size_t k) {
  const auto top = top_prototypes(s.forward.similarity_scores, k);
  if (top.shortfall == 0) return;
  skip_all(out, metrics, s.sample_id + "/shortfall",
           "only " + std::to_string(top.ids.size()) + " prototypes available, " +
               std::to_string(top.shortfall) + " short of top-" + std::to_string(k));
}

// --- per-suite work units ----------------------------------------------------

constexpr std::initializer_list<const char*> kCompletenessMetrics = {
    "PLC_out", "PSC_out", "PALC_out", "PAC_out", "VLC", "VAC"};
constexpr std::initializer_list<const char*> kContinuityProtoMetrics = {
    "PLC_conti", "PSC_conti", "PALC_conti", "PRC_conti", "PAC_conti"};
constexpr std::initializer_list<const char*> kComplexityMetrics = {
    "ObjectOverlap", "BackgroundOverlap", "IORD"};

struct UnitRef {
  std::size_t sample = 0;
  std::size_t prototype = 0;
};

std::vector<UnitRef> top_units(const Dataset& d, std::size_t k) {
  std::vector<UnitRef> units;
  for (std::size_t s = 0; s < d.samples.size(); ++s) {
    for (std::size_t p : top_ids(d.samples[s], k)) units.push_back({s, p});
  }
  return units;
}

Outcomes completeness_unit(const Dataset& d, const SuiteConfig& cfg,
                           const ForwardSource& source, const UnitRef& u) {
  Outcomes out;
  const SampleBundle& s = d.samples[u.sample];
  const std::size_t p = u.prototype;
  const std::string entity = proto_entity(s.sample_id, p);
  const SaliencySource src = d.manifest.saliency_source;

  PerturbationRecord rec;
  Map2d saliency;
  ForwardArtifacts pert;
  try {
    saliency = resolve_saliency(s.forward, p, s.image.height, s.image.width, src);
    rec = completeness_perturbation(s, p, cfg, src);
    pert = source.forward(s, PerturbationKind::kCompleteness, p, rec.image,
                          cfg.perturbation.is_identity_occlusion());
  } catch (const Error& e) {
    skip_all(out, kCompletenessMetrics, entity, e.what());
    return out;
  }

  record(out, "PLC_out", entity, [&] { return plc(map_of(s.forward, p), map_of(pert, p)); });
  record(out, "PSC_out", entity,
         [&] { return psc(score_of(s.forward, p), score_of(pert, p)); });
  record(out, "PALC_out", entity,
         [&] { return palc(map_of(s.forward, p), map_of(pert, p)); });
  record(out, "PAC_out", entity, [&] { return pac(map_of(s.forward, p), map_of(pert, p)); });

  std::optional<Map2d> pert_saliency;
  std::string reason;
  try {
    pert_saliency = resolve_saliency(pert, p, s.image.height, s.image.width, src);
  } catch (const Error& e) {
    reason = std::string("perturbed saliency unavailable: ") + e.what();
  }
  if (pert_saliency) {
    record(out, "VLC", entity, [&] {
      return vlc(*rec.box, percentile_box(*pert_saliency, cfg.perturbation.percentile));
    });
    record(out, "VAC", entity, [&] { return vac(saliency, *pert_saliency); });
  } else {
    skip_all(out, {"VLC", "VAC"}, entity, reason);
  }
  return out;
}

Outcomes continuity_unit(const Dataset& d, const SuiteConfig& cfg,
                         const ForwardSource& source, std::size_t index) {
  Outcomes out;
  const SampleBundle& s = d.samples[index];
  const auto top = top_ids(s, cfg.top_k);
  note_shortfall(out, kContinuityProtoMetrics, s, cfg.top_k);
  ForwardArtifacts pert;
  try {
    const PerturbationRecord rec = continuity_perturbation(s, cfg);
    pert = source.forward(s, PerturbationKind::kContinuity, std::nullopt, rec.image,
                          cfg.perturbation.is_identity_photometric());
  } catch (const Error& e) {
    for (std::size_t p : top) skip_all(out, kContinuityProtoMetrics, proto_entity(s.sample_id, p), e.what());
    skip_all(out, {"CAC", "CRC"}, s.sample_id, e.what());
    return out;
  }
  for (std::size_t p : top) {
    const std::string entity = proto_entity(s.sample_id, p);
    record(out, "PLC_conti", entity,
           [&] { return plc(map_of(s.forward, p), map_of(pert, p)); });
    record(out, "PSC_conti", entity,
           [&] { return psc(score_of(s.forward, p), score_of(pert, p)); });
    record(out, "PALC_conti", entity,
           [&] { return palc(map_of(s.forward, p), map_of(pert, p)); });
    record(out, "PRC_conti", entity, [&] {
      score_of(pert, p);
      if (pert.similarity_scores.size() != s.forward.similarity_scores.size()) {
        throw ShapeError("perturbed score vector length differs");
      }
      return static_cast<double>(prc(descending_rank(s.forward.similarity_scores, p),
                                     descending_rank(pert.similarity_scores, p)));
    });
    record(out, "PAC_conti", entity,
           [&] { return pac(map_of(s.forward, p), map_of(pert, p)); });
  }
  record(out, "CAC", s.sample_id,
         [&] { return cac(output_of(s.forward), output_of(pert)); });
  record(out, "CRC", s.sample_id, [&] {
    return static_cast<double>(crc(output_of(s.forward), output_of(pert)));
  });
  return out;
}

struct ContrastUnit {
  Outcomes outcomes;
  std::vector<std::size_t> top;
  // Nearest feature vector per top prototype; empty when unavailable.
  std::vector<std::vector<double>> features;
  std::string feature_reason;
};

ContrastUnit contrast_unit(const Dataset& d, const SuiteConfig& cfg, std::size_t index) {
  ContrastUnit u;
  const SampleBundle& s = d.samples[index];
  u.top = top_ids(s, cfg.top_k);
  const auto top_maps = [&] {
    std::vector<Map2d> maps;
    for (std::size_t p : u.top) maps.push_back(map_of(s.forward, p));
    return maps;
  };
  record(u.outcomes, "PLC_contra", s.sample_id,
         [&] { return pairwise_plc_contra(top_maps()); });
  record(u.outcomes, "PALC_contra", s.sample_id,
         [&] { return pairwise_palc_contra(top_maps()); });

  if (!s.forward.feature_map) {
    u.feature_reason = "sample has no feature map";
    return u;
  }
  const FeatureMap& fm = *s.forward.feature_map;
  try {
    for (std::size_t p : u.top) {
      const Map2d& m = map_of(s.forward, p);
      if (m.rows != fm.height || m.cols != fm.width) {
        throw ShapeError("similarity map and feature map extents differ");
      }
      const Cell c = argmax_cell(m);
      const auto cell = fm.cell(c.row, c.col);
      u.features.emplace_back(cell.begin(), cell.end());
    }
  } catch (const Error& e) {
    u.features.clear();
    u.feature_reason = e.what();
  }
  return u;
}

struct ComplexityUnit {
  Outcomes outcomes;
  std::optional<BoundingBox> box;
};

ComplexityUnit complexity_unit(const Dataset& d, const SuiteConfig& cfg, const UnitRef& r) {
  ComplexityUnit u;
  const SampleBundle& s = d.samples[r.sample];
  const std::string entity = proto_entity(s.sample_id, r.prototype);
  Map2d saliency;
  Mask mask;
  try {
    saliency = resolve_saliency(s.forward, r.prototype, s.image.height, s.image.width,
                                d.manifest.saliency_source);
    mask = percentile_mask(saliency, cfg.perturbation.percentile);
    u.box = bounding_box(mask);
  } catch (const Error& e) {
    skip_all(u.outcomes, kComplexityMetrics, entity, e.what());
    return u;
  }
  if (!s.object_mask) {
    skip_all(u.outcomes, kComplexityMetrics, entity, "sample has no object mask");
    return u;
  }
  record(u.outcomes, "ObjectOverlap", entity,
         [&] { return object_overlap(mask, *s.object_mask); });
  record(u.outcomes, "BackgroundOverlap", entity,
         [&] { return background_overlap(mask, *s.object_mask); });
  record(u.outcomes, "IORD", entity, [&] { return iord(saliency, *s.object_mask); });
  return u;
}

// --- assembly ------------------------------------------------------------------

class ReportBuilder {
 public:
  explicit ReportBuilder(const std::set<Suite>& suites) {
    for (const auto& info : metric_catalog()) {
      if (!suites.count(parse_suite(info.suite))) continue;
      index_[info.name] = metrics_.size();
      metrics_.push_back({info.name, info.suite, {}, {}, std::nullopt, std::nullopt});
    }
  }

  void add(const Outcome& o) {
    MetricResult& m = metrics_.at(index_.at(o.metric));
    if (o.value) {
      m.values.push_back({o.entity, *o.value});
    } else {
      m.skipped.push_back({o.entity, o.reason});
    }
  }
  void add(const Outcomes& os) {
    for (const auto& o : os) add(o);
  }
  void value(const char* metric, const std::string& entity, double v) {
    add({metric, entity, v, {}});
  }
  void skip(const char* metric, const std::string& entity, const std::string& reason) {
    add({metric, entity, std::nullopt, reason});
  }

  std::vector<MetricResult> finish() {
    for (auto& m : metrics_) protoeval::finalize(m);
    return std::move(metrics_);
  }

 private:
  std::vector<MetricResult> metrics_;
  std::map<std::string, std::size_t> index_;
};

template <typename T, typename Fn>
std::vector<T> run_units(std::size_t count, std::size_t workers, Fn&& fn) {
  std::vector<T> results(count);
  parallel_for(count, workers, [&](std::size_t i) { results[i] = fn(i); });
  return results;
}

void add_set_distance(ReportBuilder& b, const char* metric,
                      SetDistance (*fn)(const ClassVectorSets&),
                      const ClassVectorSets& sets) {
  try {
    const SetDistance r = fn(sets);
    b.value(metric, "test-set", r.value);
    for (std::size_t k : r.skipped_classes) {
      b.skip(metric, "class" + std::to_string(k),
             "class has too few members for this distance");
    }
  } catch (const Error& e) {
    b.skip(metric, "test-set", e.what());
  }
}

void run_contrastivity(const Dataset& d, const SuiteConfig& cfg, ReportBuilder& b) {
  const auto units = run_units<ContrastUnit>(
      d.samples.size(), cfg.parallelism, [&](std::size_t i) { return contrast_unit(d, cfg, i); });

  const std::size_t classes = d.model.class_count();
  ClassVectorSets protos(classes), features(classes);
  std::vector<std::set<std::size_t>> proto_seen(classes);
  std::size_t feature_id = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    b.add(u.outcomes);
    const SampleBundle& s = d.samples[i];
    if (u.features.empty()) {
      for (const char* m : {"AFD_intra", "AFD_inter"}) b.skip(m, s.sample_id, u.feature_reason);
    }
    for (int label : s.labels) {
      const auto k = static_cast<std::size_t>(label);
      for (std::size_t j = 0; j < u.top.size(); ++j) {
        const std::size_t p = u.top[j];
        if (d.model.is_explicit() && proto_seen[k].insert(p).second) {
          protos[k].push_back({p, d.model.prototypes.at(p)});
        }
        if (!u.features.empty()) features[k].push_back({feature_id++, u.features[j]});
      }
    }
  }

  if (d.model.is_explicit()) {
    add_set_distance(b, "APD_intra", mean_cosine_distance_intra, protos);
    add_set_distance(b, "APD_inter", mean_cosine_distance_inter, protos);
  } else {
    const std::string na = "not applicable: indirect model has no prototype vectors";
    b.skip("APD_intra", "model", na);
    b.skip("APD_inter", "model", na);
  }
  add_set_distance(b, "AFD_intra", mean_cosine_distance_intra, features);
  add_set_distance(b, "AFD_inter", mean_cosine_distance_inter, features);

  const std::size_t n = d.model.prototype_count();
  const auto entropy = run_units<Outcomes>(n, cfg.parallelism, [&](std::size_t p) {
    Outcomes out;
    record(out, "Entropy", "p" + std::to_string(p), [&] {
      std::vector<double> series;
      series.reserve(d.samples.size());
      for (const auto& s : d.samples) series.push_back(score_of(s.forward, p));
      return activation_entropy(series, cfg.entropy_bins);
    });
    return out;
  });
  for (const auto& o : entropy) b.add(o);
}

void run_complexity(const Dataset& d, const SuiteConfig& cfg, ReportBuilder& b) {
  const auto refs = top_units(d, cfg.top_k);
  const auto units = run_units<ComplexityUnit>(
      refs.size(), cfg.parallelism,
      [&](std::size_t i) { return complexity_unit(d, cfg, refs[i]); });
  for (const auto& s : d.samples) {
    Outcomes shortfall;
    note_shortfall(shortfall, kComplexityMetrics, s, cfg.top_k);
    b.add(shortfall);
  }

  std::map<std::size_t, PartHistogram> histograms;
  for (std::size_t i = 0; i < units.size(); ++i) {
    b.add(units[i].outcomes);
    if (units[i].box) {
      accumulate_parts(histograms[refs[i].prototype], *units[i].box,
                       d.samples[refs[i].sample].parts);
    }
  }
  for (const auto& [p, hist] : histograms) {
    const std::string entity = "p" + std::to_string(p);
    if (d.manifest.part_vocabulary.empty()) {
      b.skip("Consistency", entity, "manifest declares no part vocabulary");
      continue;
    }
    Outcomes out;
    record(out, "Consistency", entity,
           [&] { return consistency(hist, d.manifest.part_vocabulary); });
    b.add(out);
  }
}

void run_compactness(const Dataset& d, const SuiteConfig& cfg, ReportBuilder& b) {
  const ModelBundle& m = d.model;
  Outcomes out;
  record(out, "GlobalSize", "model", [&] {
    const Grid<double> presence = m.kind == ModelKind::kExplicitShared
                                      ? presence_matrix(m.slot_assignment)
                                      : m.classifier_weights;
    return static_cast<double>(global_size(presence, cfg.epsilon));
  });
  record(out, "Sparsity", "model", [&] { return sparsity(m.classifier_weights, cfg.epsilon); });
  b.add(out);
  if (const auto ratio = npr(m.classifier_weights, cfg.epsilon)) {
    b.value("NPR", "model", *ratio);
  } else {
    b.skip("NPR", "model", "undefined: negative weights but no positive weights");
  }
  for (const auto& s : d.samples) {
    Outcomes local;
    record(local, "LocalSize", s.sample_id, [&] {
      return static_cast<double>(local_size(s.forward.similarity_scores, cfg.mu));
    });
    b.add(local);
  }
}

void run_performance(const Dataset& d, const SuiteConfig& cfg, ReportBuilder& b) {
  std::vector<std::vector<double>> outputs;
  std::vector<std::vector<int>> labels;
  for (const auto& s : d.samples) {
    outputs.push_back(s.forward.output);
    labels.push_back(s.labels);
  }
  try {
    const Performance perf =
        performance(outputs, labels, d.manifest.multilabel, cfg.performance_k);
    b.value("Accuracy", "test-set", perf.accuracy);
    if (perf.topk_accuracy) {
      b.value("TopKAccuracy", "test-set", *perf.topk_accuracy);
    } else {
      b.skip("TopKAccuracy", "test-set", "not defined for multi-label data");
    }
    b.value("F1", "test-set", perf.f1);
  } catch (const Error& e) {
    for (const char* m : {"Accuracy", "TopKAccuracy", "F1"}) b.skip(m, "test-set", e.what());
  }
}

void check_suite_prerequisites(const Dataset& d, const SuiteConfig& cfg) {
  const auto any = [&](auto pred) {
    return std::any_of(d.samples.begin(), d.samples.end(), pred);
  };
  if (d.samples.empty()) throw SuiteError("dataset has no samples");
  const bool needs_saliency =
      cfg.suites.count(Suite::kCompleteness) || cfg.suites.count(Suite::kComplexity);
  if (needs_saliency && d.manifest.saliency_source == SaliencySource::kProvided &&
      !any([](const SampleBundle& s) { return !s.forward.saliency_maps.empty(); })) {
    throw SuiteError("no sample provides saliency maps");
  }
  if (cfg.suites.count(Suite::kComplexity) &&
      !any([](const SampleBundle& s) { return s.object_mask.has_value(); })) {
    throw SuiteError("complexity suite needs object masks and none are present");
  }
}

bool manifest_has_entries(const Dataset& d, PerturbationKind kind) {
  return std::any_of(d.samples.begin(), d.samples.end(), [&](const SampleBundle& s) {
    return std::any_of(s.perturbed.begin(), s.perturbed.end(),
                       [&](const PerturbedEntry& e) { return e.kind == kind; });
  });
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Suite suite) {
  switch (suite) {
    case Suite::kCompleteness: return "completeness";
    case Suite::kContinuity: return "continuity";
    case Suite::kContrastivity: return "contrastivity";
    case Suite::kComplexity: return "complexity";
    case Suite::kCompactness: return "compactness";
    case Suite::kPerformance: return "performance";
  }
  return "unknown";
}

Suite parse_suite(const std::string& text) {
  for (Suite s : all_suites()) {
    if (to_string(s) == text) return s;
  }
  throw UsageError("unknown suite '" + text + "'");
}

std::vector<Suite> all_suites() {
  return {Suite::kCompleteness, Suite::kContinuity, Suite::kContrastivity,
          Suite::kComplexity,   Suite::kCompactness, Suite::kPerformance};
}

void SuiteConfig::validate() const {
  if (top_k < 1) throw ValidationError("top_k must be at least 1");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(mu >= 0.0 && mu < 1.0)) throw ValidationError("mu must lie in [0, 1)");
  if (entropy_bins < 1) throw ValidationError("entropy_bins must be at least 1");
  if (performance_k < 1) throw ValidationError("performance_k must be at least 1");
  if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
  if (grouping != "single" && grouping != "folds" && grouping != "seeds") {
    throw ValidationError("grouping must be single, folds or seeds");
  }
  perturbation.validate();
}

SuiteConfig parse_suite_config(const std::string& text) {
  SuiteConfig cfg;
  if (const char* env = std::getenv(kParallelismEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 1) cfg.parallelism = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ManifestError(std::string(kParallelismEnv) + " is not an integer");
    }
  }
  for (Suite s : all_suites()) cfg.suites.insert(s);

  static const std::set<std::string> kTop = {
      "suites", "perturbation", "top_k", "epsilon", "mu", "entropy_bins",
      "performance_k", "parallelism", "seed", "label", "grouping"};
  static const std::set<std::string> kPerturb = {
      "occlusion_sigma", "percentile", "brightness", "contrast", "saturation",
      "hue_shift", "noise_sigma", "jpeg_quality", "blur_kernel"};
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ManifestError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!kTop.count(key)) throw ManifestError("unknown config key '" + key + "'");
    }
    if (j.contains("suites")) {
      cfg.suites.clear();
      for (const auto& s : j.at("suites")) {
        try {
          cfg.suites.insert(parse_suite(s.get<std::string>()));
        } catch (const UsageError& e) {
          throw ManifestError(e.what());
        }
      }
    }
    if (j.contains("perturbation")) {
      const json& p = j.at("perturbation");
      for (const auto& [key, _] : p.items()) {
        if (!kPerturb.count(key)) {
          throw ManifestError("unknown perturbation key '" + key + "'");
        }
      }
      auto& pc = cfg.perturbation;
      pc.occlusion_sigma = p.value("occlusion_sigma", pc.occlusion_sigma);
      pc.percentile = p.value("percentile", pc.percentile);
      pc.brightness = p.value("brightness", pc.brightness);
      pc.contrast = p.value("contrast", pc.contrast);
      pc.saturation = p.value("saturation", pc.saturation);
      pc.hue_shift = p.value("hue_shift", pc.hue_shift);
      pc.noise_sigma = p.value("noise_sigma", pc.noise_sigma);
      pc.jpeg_quality = p.value("jpeg_quality", pc.jpeg_quality);
      pc.blur_kernel = p.value("blur_kernel", pc.blur_kernel);
    }
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.mu = j.value("mu", cfg.mu);
    cfg.entropy_bins = j.value("entropy_bins", cfg.entropy_bins);
    cfg.performance_k = j.value("performance_k", cfg.performance_k);
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.perturbation.seed = j.value("seed", cfg.perturbation.seed);
    cfg.label = j.value("label", cfg.label);
    cfg.grouping = j.value("grouping", cfg.grouping);
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SuiteConfig load_suite_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_suite_config(buf.str());
}

std::string suite_config_to_json(const SuiteConfig& cfg) {
  std::vector<std::string> suites;
  for (Suite s : cfg.suites) suites.push_back(to_string(s));
  const auto& p = cfg.perturbation;
  const json j = {
      {"suites", suites},
      {"perturbation",
       {{"occlusion_sigma", p.occlusion_sigma},
        {"percentile", p.percentile},
        {"brightness", p.brightness},
        {"contrast", p.contrast},
        {"saturation", p.saturation},
        {"hue_shift", p.hue_shift},
        {"noise_sigma", p.noise_sigma},
        {"jpeg_quality", p.jpeg_quality},
        {"blur_kernel", p.blur_kernel}}},
      {"top_k", cfg.top_k},
      {"epsilon", cfg.epsilon},
      {"mu", cfg.mu},
      {"entropy_bins", cfg.entropy_bins},
      {"performance_k", cfg.performance_k},
      {"seed", p.seed},
      {"label", cfg.label},
      {"grouping", cfg.grouping},
  };
  return j.dump();
}

std::string config_hash(const SuiteConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(suite_config_to_json(config))));
  return buf;
}

ForwardArtifacts ManifestForwardSource::forward(const SampleBundle& sample,
                                                PerturbationKind kind,
                                                std::optional<std::size_t> prototype,
                                                const Image&, bool identity) const {
  const auto key = kind == PerturbationKind::kCompleteness ? prototype : std::nullopt;
  const PerturbedEntry* entry = sample.find_perturbed(kind, key);
  if (!entry) {
    if (identity) return sample.forward;
    throw MissingArtifactError("no perturbed " + to_string(kind) + " artifacts");
  }
  const ForwardArtifacts& a = entry->artifacts;
  if (manifest_.perturbed_artifacts == PerturbedArtifactMode::kRegenerate &&
      a.feature_map) {
    ForwardArtifacts regen = forward_from_features(model_, *a.feature_map);
    regen.saliency_maps = a.saliency_maps;
    return regen;
  }
  if (a.similarity_maps.empty() || a.similarity_scores.empty()) {
    throw MissingArtifactError("perturbed entry lacks similarity maps and scores");
  }
  return a;
}

ForwardArtifacts BackboneForwardSource::forward(const SampleBundle& sample,
                                                PerturbationKind,
                                                std::optional<std::size_t>,
                                                const Image& perturbed,
                                                bool identity) const {
  if (identity) return sample.forward;
  return forward_from_features(model_, backbone_(perturbed));
}

Map2d resolve_saliency(const ForwardArtifacts& artifacts, std::size_t prototype,
                       std::size_t height, std::size_t width, SaliencySource source) {
  if (source == SaliencySource::kUpsample) {
    return upscale_similarity(map_of(artifacts, prototype), height, width);
  }
  const auto it = artifacts.saliency_maps.find(prototype);
  if (it == artifacts.saliency_maps.end()) {
    throw MissingArtifactError("no saliency map for prototype " + std::to_string(prototype));
  }
  return it->second;
}

PerturbationRecord completeness_perturbation(const SampleBundle& sample,
                                             std::size_t prototype,
                                             const SuiteConfig& config,
                                             SaliencySource source) {
  const Map2d saliency = resolve_saliency(sample.forward, prototype, sample.image.height,
                                          sample.image.width, source);
  PerturbationRecord rec;
  rec.sample_id = sample.sample_id;
  rec.kind = PerturbationKind::kCompleteness;
  rec.prototype = prototype;
  rec.box = percentile_box(saliency, config.perturbation.percentile);
  rec.seed = derive_seed(config.perturbation.seed, "completeness/" + sample.sample_id,
                         prototype);
  rec.image = occlude_outside(sample.image, *rec.box, config.perturbation.occlusion_sigma,
                              rec.seed);
  return rec;
}

PerturbationRecord continuity_perturbation(const SampleBundle& sample,
                                           const SuiteConfig& config) {
  PerturbationRecord rec;
  rec.sample_id = sample.sample_id;
  rec.kind = PerturbationKind::kContinuity;
  rec.seed = derive_seed(config.perturbation.seed, "continuity/" + sample.sample_id);
  PerturbationConfig pc = config.perturbation;
  pc.seed = rec.seed;
  rec.image = photometric_suite(sample.image, pc);
  return rec;
}

std::vector<PerturbationRecord> generate_perturbations(const Dataset& dataset,
                                                       const SuiteConfig& config,
                                                       std::vector<SkippedEntity>* skipped) {
  std::vector<PerturbationRecord> out;
  for (const auto& s : dataset.samples) {
    if (config.suites.count(Suite::kCompleteness)) {
      for (std::size_t p : top_ids(s, config.top_k)) {
        try {
          out.push_back(completeness_perturbation(s, p, config,
                                                  dataset.manifest.saliency_source));
        } catch (const Error& e) {
          if (skipped) skipped->push_back({proto_entity(s.sample_id, p), e.what()});
        }
      }
    }
    if (config.suites.count(Suite::kContinuity)) {
      out.push_back(continuity_perturbation(s, config));
    }
  }
  return out;
}

MetricReport run_suite(const Dataset& d, const SuiteConfig& cfg, const ForwardSource& source) {
  cfg.validate();
  check_suite_prerequisites(d, cfg);
  if (dynamic_cast<const ManifestForwardSource*>(&source)) {
    if (cfg.suites.count(Suite::kCompleteness) && !cfg.perturbation.is_identity_occlusion() &&
        !manifest_has_entries(d, PerturbationKind::kCompleteness)) {
      throw SuiteError("completeness suite needs perturbed artifacts and none are present");
    }
    if (cfg.suites.count(Suite::kContinuity) && !cfg.perturbation.is_identity_photometric() &&
        !manifest_has_entries(d, PerturbationKind::kContinuity)) {
      throw SuiteError("continuity suite needs perturbed artifacts and none are present");
    }
  }

  MetricReport report;
  report.metadata.started_at = now_iso8601();
  report.metadata.label = cfg.label.empty() ? d.manifest.dataset_name : cfg.label;
  report.metadata.dataset = d.manifest.dataset_name;
  report.metadata.model_kind = to_string(d.model.kind);
  report.metadata.grouping = cfg.grouping;
  report.metadata.config_hash = config_hash(cfg);
  report.metadata.seed = cfg.perturbation.seed;
  for (Suite s : cfg.suites) report.metadata.suites.push_back(to_string(s));

  ReportBuilder b(cfg.suites);
  if (cfg.suites.count(Suite::kCompleteness)) {
    const auto refs = top_units(d, cfg.top_k);
    const auto units = run_units<Outcomes>(refs.size(), cfg.parallelism, [&](std::size_t i) {
      return completeness_unit(d, cfg, source, refs[i]);
    });
    for (const auto& s : d.samples) {
      Outcomes shortfall;
      note_shortfall(shortfall, kCompletenessMetrics, s, cfg.top_k);
      b.add(shortfall);
    }
    for (const auto& u : units) b.add(u);
  }
  if (cfg.suites.count(Suite::kContinuity)) {
    const auto units = run_units<Outcomes>(d.samples.size(), cfg.parallelism,
                                           [&](std::size_t i) {
                                             return continuity_unit(d, cfg, source, i);
                                           });
    for (const auto& u : units) b.add(u);
  }
  if (cfg.suites.count(Suite::kContrastivity)) run_contrastivity(d, cfg, b);
  if (cfg.suites.count(Suite::kComplexity)) run_complexity(d, cfg, b);
  if (cfg.suites.count(Suite::kCompactness)) run_compactness(d, cfg, b);
  if (cfg.suites.count(Suite::kPerformance)) run_performance(d, cfg, b);

  report.metrics = b.finish();
  report.metadata.finished_at = now_iso8601();
  return report;
}

MetricReport run_suite(const Dataset& dataset, const SuiteConfig& config) {
  const ManifestForwardSource source(dataset.model, dataset.manifest);
  return run_suite(dataset, config, source);
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace protoeval
