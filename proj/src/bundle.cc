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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "protoeval/interchange.h"

namespace protoeval {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kDistributionTolerance = 1e-5;
constexpr double kScoreTolerance = 1e-5;

std::string join(const std::vector<std::string>& lines) {
  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    os << (i ? "\n" : "") << lines[i];
  }
  return os.str();
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// Resolves and reads the tensor at json[key], reporting problems against the
// manifest rather than as raw I/O errors.
class ManifestReader {
 public:
  explicit ManifestReader(fs::path manifest) : manifest_(std::move(manifest)) {
    base_ = manifest_.parent_path();
  }

  Tensor tensor(const json& node, const std::string& where) const {
    if (!node.is_string()) {
      throw ManifestError(where + ": expected a relative file path");
    }
    const fs::path path = base_ / node.get<std::string>();
    if (!fs::exists(path)) {
      throw ManifestError(where + ": referenced file " + path.string() +
                          " does not exist");
    }
    try {
      return read_tensor(path);
    } catch (const Error& e) {
      throw ManifestError(where + ": " + e.what());
    }
  }

  template <typename Fn>
  auto convert(const json& node, const std::string& where, Fn fn) const {
    Tensor t = tensor(node, where);
    try {
      return fn(t);
    } catch (const ShapeError& e) {
      throw ManifestError(where + ": " + e.what());
    }
  }

 private:
  fs::path manifest_;
  fs::path base_;
};

const json& require(const json& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.end()) {
    throw ManifestError(where + ": missing required field \"" + key + "\"");
  }
  return *it;
}

template <typename T>
T get_as(const json& node, const std::string& where) {
  try {
    return node.get<T>();
  } catch (const json::exception& e) {
    throw ManifestError(where + ": " + e.what());
  }
}

ForwardArtifacts read_artifacts(const json& node, const ManifestReader& reader,
                                const std::string& where) {
  ForwardArtifacts fa;
  if (auto it = node.find("feature_map"); it != node.end()) {
    fa.feature_map = reader.convert(*it, where + ".feature_map", to_feature_map);
  }
  if (auto it = node.find("similarity_maps"); it != node.end()) {
    fa.similarity_maps = reader.convert(*it, where + ".similarity_maps", to_maps);
  }
  if (auto it = node.find("similarity_scores"); it != node.end()) {
    fa.similarity_scores =
        reader.convert(*it, where + ".similarity_scores", to_vector);
  }
  if (auto it = node.find("saliency_maps"); it != node.end()) {
    if (!it->is_object()) {
      throw ManifestError(where + ".saliency_maps: expected an object "
                          "mapping prototype index to file");
    }
    for (const auto& [key, value] : it->items()) {
      std::size_t proto = 0;
      try {
        std::size_t consumed = 0;
        proto = std::stoul(key, &consumed);
        if (consumed != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ManifestError(where + ".saliency_maps: key \"" + key +
                            "\" is not a prototype index");
      }
      fa.saliency_maps.emplace(
          proto, reader.convert(value, where + ".saliency_maps." + key, to_map));
    }
  }
  if (auto it = node.find("output"); it != node.end()) {
    fa.output = reader.convert(*it, where + ".output", to_vector);
  }
  return fa;
}

Mask to_mask(const Tensor& t) {
  const Map2d m = to_map(t);
  Mask mask(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    // Out-of-set values are caught by validate_sample; keep a marker here.
    mask.values[i] = m.values[i] == 0.0 ? 0 : (m.values[i] == 1.0 ? 1 : 2);
  }
  return mask;
}

PerturbationKind parse_kind(const std::string& text, const std::string& where) {
  if (text == "completeness") return PerturbationKind::kCompleteness;
  if (text == "continuity") return PerturbationKind::kContinuity;
  throw ManifestError(where + ": unknown perturbation kind \"" + text + "\"");
}

void check_artifacts(const ForwardArtifacts& fa, const ModelBundle& model,
                     std::size_t image_h, std::size_t image_w,
                     const std::string& who, bool require_similarity,
                     std::vector<std::string>& out) {
  auto fail = [&](const std::string& msg) { out.push_back(who + ": " + msg); };
  const std::size_t n = model.prototype_count();
  const std::size_t k = model.class_count();

  if (fa.feature_map) {
    const auto& fm = *fa.feature_map;
    if (!all_finite(fm.values)) fail("feature map has non-finite values");
    if (model.is_explicit() && !model.prototypes.empty() &&
        fm.depth != model.prototypes.front().size()) {
      fail("feature map depth " + std::to_string(fm.depth) +
           " differs from prototype dimension " +
           std::to_string(model.prototypes.front().size()));
    }
    if (!model.is_explicit() && fm.depth != n) {
      fail("feature map depth " + std::to_string(fm.depth) +
           " differs from prototype channel count " + std::to_string(n));
    }
  }

  const bool has_maps = !fa.similarity_maps.empty();
  const bool has_scores = !fa.similarity_scores.empty();
  if (require_similarity && (!has_maps || !has_scores)) {
    fail("similarity maps and scores are required");
  }
  if (has_maps || has_scores) {
    if (fa.similarity_maps.size() != fa.similarity_scores.size()) {
      fail("similarity map count " + std::to_string(fa.similarity_maps.size()) +
           " differs from score count " +
           std::to_string(fa.similarity_scores.size()));
    } else {
      if (fa.similarity_maps.size() != n) {
        fail("expected " + std::to_string(n) + " similarity maps, got " +
             std::to_string(fa.similarity_maps.size()));
      }
      for (std::size_t i = 0; i < fa.similarity_maps.size(); ++i) {
        const auto& m = fa.similarity_maps[i].values;
        if (!all_finite(m) || !std::isfinite(fa.similarity_scores[i])) {
          fail("similarity map " + std::to_string(i) + " has non-finite values");
          continue;
        }
        const double mx = *std::max_element(m.begin(), m.end());
        if (std::abs(mx - fa.similarity_scores[i]) > kScoreTolerance) {
          std::ostringstream os;
          os << "similarity score " << i << " (" << fa.similarity_scores[i]
             << ") differs from max of its map (" << mx << ")";
          fail(os.str());
        }
      }
    }
  }

  for (const auto& [proto, map] : fa.saliency_maps) {
    if (proto >= n) {
      fail("saliency map for unknown prototype " + std::to_string(proto));
    }
    if (map.rows != image_h || map.cols != image_w) {
      fail("saliency map " + std::to_string(proto) +
           " does not match the image extent");
    }
    if (!all_finite(map.values) ||
        std::any_of(map.values.begin(), map.values.end(),
                    [](double v) { return v < 0.0; })) {
      fail("saliency map " + std::to_string(proto) +
           " must be finite and nonnegative");
    }
  }

  if (!fa.output.empty()) {
    if (fa.output.size() != k) {
      fail("output has " + std::to_string(fa.output.size()) +
           " logits, expected " + std::to_string(k));
    }
    if (!all_finite(fa.output)) fail("output has non-finite values");
  }
}

json tensor_ref(const fs::path& dir, const fs::path& rel, const Tensor& t) {
  fs::create_directories((dir / rel).parent_path());
  write_tensor(t, dir / rel);
  return rel.generic_string();
}

json write_artifacts(const ForwardArtifacts& fa, const fs::path& dir,
                     const fs::path& prefix) {
  json node = json::object();
  if (fa.feature_map) {
    node["feature_map"] =
        tensor_ref(dir, prefix / "feature_map.qpt", tensor_from(*fa.feature_map));
  }
  if (!fa.similarity_maps.empty()) {
    node["similarity_maps"] = tensor_ref(dir, prefix / "similarity_maps.qpt",
                                         tensor_from(fa.similarity_maps));
  }
  if (!fa.similarity_scores.empty()) {
    node["similarity_scores"] =
        tensor_ref(dir, prefix / "similarity_scores.qpt",
                   tensor_from(std::span<const double>(fa.similarity_scores)));
  }
  if (!fa.saliency_maps.empty()) {
    json sal = json::object();
    for (const auto& [proto, map] : fa.saliency_maps) {
      sal[std::to_string(proto)] = tensor_ref(
          dir, prefix / ("saliency_" + std::to_string(proto) + ".qpt"),
          tensor_from(map));
    }
    node["saliency_maps"] = sal;
  }
  if (!fa.output.empty()) {
    node["output"] = tensor_ref(dir, prefix / "output.qpt",
                                tensor_from(std::span<const double>(fa.output)));
  }
  return node;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kExplicitClassSpecific: return "explicit-class-specific";
    case ModelKind::kExplicitShared: return "explicit-shared";
    case ModelKind::kIndirect: return "indirect";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "explicit-class-specific") return ModelKind::kExplicitClassSpecific;
  if (text == "explicit-shared") return ModelKind::kExplicitShared;
  if (text == "indirect") return ModelKind::kIndirect;
  throw ManifestError("unknown model kind \"" + text + "\"");
}

std::string to_string(PerturbationKind kind) {
  return kind == PerturbationKind::kCompleteness ? "completeness" : "continuity";
}

const PerturbedEntry* SampleBundle::find_perturbed(
    PerturbationKind kind, std::optional<std::size_t> prototype) const {
  for (const auto& e : perturbed) {
    if (e.kind == kind && e.prototype == prototype) return &e;
  }
  return nullptr;
}

std::size_t ModelBundle::prototype_count() const {
  if (!prototypes.empty()) return prototypes.size();
  if (!slot_assignment.empty() && !slot_assignment.front().empty()) {
    return slot_assignment.front().front().size();
  }
  return classifier_weights.cols;
}

std::size_t ModelBundle::slots_per_class() const {
  return slot_assignment.empty() ? 0 : slot_assignment.front().size();
}

BundleValidationError::BundleValidationError(std::vector<std::string> violations)
    : ValidationError(join(violations)), violations_(std::move(violations)) {}

std::vector<std::string> validate_model(const ModelBundle& model) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& msg) { out.push_back("model: " + msg); };
  const std::size_t k = model.class_count();
  if (k < 2) fail("classifier must have at least 2 class rows");
  if (!all_finite(model.classifier_weights.values)) {
    fail("classifier weights have non-finite values");
  }

  if (model.is_explicit()) {
    if (model.prototypes.empty()) fail("explicit models require prototypes");
    for (std::size_t i = 0; i < model.prototypes.size(); ++i) {
      if (model.prototypes[i].size() != model.prototypes.front().size()) {
        fail("prototype " + std::to_string(i) + " has a different dimension");
      }
      if (!all_finite(model.prototypes[i])) {
        fail("prototype " + std::to_string(i) + " has non-finite values");
      }
    }
  } else if (!model.prototypes.empty()) {
    fail("indirect models carry no prototype vectors");
  }

  const bool class_specific = model.kind == ModelKind::kExplicitClassSpecific;
  if (class_specific != !model.class_of_prototype.empty()) {
    fail("class_of_prototype must be present iff the model is "
         "explicit-class-specific");
  }
  if (class_specific && !model.class_of_prototype.empty()) {
    if (model.class_of_prototype.size() != model.prototypes.size()) {
      fail("class_of_prototype length differs from prototype count");
    }
    for (int c : model.class_of_prototype) {
      if (c < 0 || static_cast<std::size_t>(c) >= k) {
        fail("class_of_prototype entry " + std::to_string(c) + " out of range");
        break;
      }
    }
  }

  const std::size_t n = model.prototype_count();
  if (model.kind == ModelKind::kExplicitShared) {
    if (model.slot_assignment.empty()) {
      fail("explicit-shared models require a slot assignment");
    } else {
      if (model.slot_assignment.size() != k) {
        fail("slot assignment has " + std::to_string(model.slot_assignment.size()) +
             " classes, classifier has " + std::to_string(k));
      }
      const std::size_t slots = model.slots_per_class();
      for (std::size_t c = 0; c < model.slot_assignment.size(); ++c) {
        if (model.slot_assignment[c].size() != slots) {
          fail("class " + std::to_string(c) + " has a different slot count");
          continue;
        }
        for (std::size_t l = 0; l < slots; ++l) {
          const auto& q = model.slot_assignment[c][l];
          if (q.size() != n) {
            fail("slot distribution length differs from prototype count");
            continue;
          }
          double sum = 0.0;
          bool negative = false;
          for (double v : q) {
            sum += v;
            negative |= v < 0.0;
          }
          if (negative || std::abs(sum - 1.0) > kDistributionTolerance) {
            std::ostringstream os;
            os << "slot distribution (class " << c << ", slot " << l
               << ") sums to " << sum << ", expected 1";
            fail(os.str());
          }
        }
      }
      const std::size_t cols = model.classifier_weights.cols;
      if (cols != slots && cols != slots * k) {
        fail("classifier for a shared model must have L or K*L columns");
      }
    }
  } else {
    if (!model.slot_assignment.empty()) {
      fail("slot assignment is only valid for explicit-shared models");
    }
    if (model.is_explicit() && model.classifier_weights.cols != n) {
      fail("classifier column count differs from prototype count");
    }
  }
  if (model.similarity_epsilon <= 0.0 || model.similarity_epsilon >= 1.0) {
    fail("similarity epsilon must lie in (0, 1)");
  }
  return out;
}

std::vector<std::string> validate_sample(const SampleBundle& sample,
                                         const ModelBundle& model,
                                         const Manifest& manifest) {
  std::vector<std::string> out;
  const std::string who = "sample " + sample.sample_id;
  auto fail = [&](const std::string& msg) { out.push_back(who + ": " + msg); };

  const auto& img = sample.image;
  if (img.height == 0 || img.width == 0) fail("image is empty");
  if (std::any_of(img.pixels.begin(), img.pixels.end(), [](double v) {
        return !std::isfinite(v) || v < 0.0 || v > 1.0;
      })) {
    fail("image values must lie in [0,1]");
  }

  check_artifacts(sample.forward, model, img.height, img.width, who, true, out);
  if (sample.forward.output.empty()) fail("output is required");

  if (sample.object_mask) {
    const auto& m = *sample.object_mask;
    if (m.rows != img.height || m.cols != img.width) {
      fail("object mask does not match the image extent");
    }
    if (std::any_of(m.values.begin(), m.values.end(),
                    [](std::uint8_t v) { return v > 1; })) {
      fail("object mask values must be 0 or 1");
    }
  }

  std::set<int> seen;
  const std::set<int> vocab(manifest.part_vocabulary.begin(),
                            manifest.part_vocabulary.end());
  for (const auto& p : sample.parts) {
    if (!seen.insert(p.part_id).second) {
      fail("duplicate part id " + std::to_string(p.part_id));
    }
    if (!vocab.count(p.part_id)) {
      fail("part id " + std::to_string(p.part_id) + " not in vocabulary");
    }
    if (!std::isfinite(p.row) || !std::isfinite(p.col)) {
      fail("part " + std::to_string(p.part_id) + " has non-finite coordinates");
    }
  }

  if (sample.labels.empty()) fail("at least one label is required");
  if (!manifest.multilabel && sample.labels.size() > 1) {
    fail("single-label dataset with multiple labels");
  }
  for (int label : sample.labels) {
    if (label < 0 || label >= manifest.class_count) {
      fail("label " + std::to_string(label) + " out of range");
    }
  }

  for (const auto& e : sample.perturbed) {
    const std::string sub =
        who + " perturbed[" + to_string(e.kind) +
        (e.prototype ? ":" + std::to_string(*e.prototype) : std::string()) + "]";
    if (e.kind == PerturbationKind::kCompleteness && !e.prototype) {
      out.push_back(sub + ": completeness entries need a prototype");
    }
    if (e.prototype && *e.prototype >= model.prototype_count()) {
      out.push_back(sub + ": prototype index out of range");
    }
    const bool preexported =
        manifest.perturbed_artifacts == PerturbedArtifactMode::kPreexported;
    if (!preexported && !e.artifacts.feature_map &&
        e.artifacts.similarity_maps.empty()) {
      out.push_back(sub + ": regenerate mode needs a feature map");
    }
    if (preexported && e.artifacts.output.empty()) {
      out.push_back(sub + ": pre-exported entries need an output");
    }
    check_artifacts(e.artifacts, model, img.height, img.width, sub, preexported,
                    out);
  }
  return out;
}

Dataset load_bundle(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw ManifestError("cannot open manifest " + manifest_path.string());
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!root.is_object()) throw ManifestError("manifest root must be an object");

  const ManifestReader reader(manifest_path);
  Dataset ds;
  Manifest& mf = ds.manifest;
  mf.path = manifest_path;
  mf.dataset_name = get_as<std::string>(require(root, "dataset_name", "manifest"),
                                        "dataset_name");
  mf.class_count = get_as<int>(require(root, "class_count", "manifest"),
                               "class_count");
  if (mf.class_count < 2) throw ManifestError("class_count must be >= 2");
  mf.multilabel = root.value("multilabel", false);
  if (auto it = root.find("part_vocabulary"); it != root.end()) {
    mf.part_vocabulary = get_as<std::vector<int>>(*it, "part_vocabulary");
  }
  const std::string saliency = root.value("saliency_source", "provided");
  if (saliency == "provided") {
    mf.saliency_source = SaliencySource::kProvided;
  } else if (saliency == "upsample") {
    mf.saliency_source = SaliencySource::kUpsample;
  } else {
    throw ManifestError("unknown saliency_source \"" + saliency + "\"");
  }
  const std::string mode = root.value("perturbed_artifacts", "regenerate");
  if (mode == "regenerate") {
    mf.perturbed_artifacts = PerturbedArtifactMode::kRegenerate;
  } else if (mode == "preexported") {
    mf.perturbed_artifacts = PerturbedArtifactMode::kPreexported;
  } else {
    throw ManifestError("unknown perturbed_artifacts \"" + mode + "\"");
  }

  const json& jm = require(root, "model", "manifest");
  ModelBundle& model = ds.model;
  model.kind = parse_model_kind(get_as<std::string>(require(jm, "kind", "model"),
                                                    "model.kind"));
  model.classifier_weights = reader.convert(
      require(jm, "classifier_weights", "model"), "model.classifier_weights",
      to_map);
  if (auto it = jm.find("prototypes"); it != jm.end() && !it->is_null()) {
    const Map2d p = reader.convert(*it, "model.prototypes", to_map);
    for (std::size_t r = 0; r < p.rows; ++r) {
      model.prototypes.emplace_back(p.values.begin() + static_cast<std::ptrdiff_t>(r * p.cols),
                                    p.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * p.cols));
    }
  }
  if (auto it = jm.find("slot_assignment"); it != jm.end() && !it->is_null()) {
    const Tensor t = reader.tensor(*it, "model.slot_assignment");
    if (t.rank() != 3) {
      throw ManifestError("model.slot_assignment must be a K x L x n tensor");
    }
    const std::size_t k = t.dims[0], l = t.dims[1], n = t.dims[2];
    model.slot_assignment.assign(k, std::vector<std::vector<double>>(l));
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t s = 0; s < l; ++s) {
        auto first = t.data.begin() + static_cast<std::ptrdiff_t>((c * l + s) * n);
        model.slot_assignment[c][s].assign(first, first + static_cast<std::ptrdiff_t>(n));
      }
    }
  }
  if (auto it = jm.find("class_of_prototype"); it != jm.end() && !it->is_null()) {
    model.class_of_prototype =
        get_as<std::vector<int>>(*it, "model.class_of_prototype");
  }
  model.similarity_epsilon = jm.value("similarity_epsilon", 1e-4);

  std::vector<std::string> violations = validate_model(model);
  if (static_cast<int>(model.class_count()) != mf.class_count) {
    violations.push_back("model: classifier has " +
                         std::to_string(model.class_count()) +
                         " rows but class_count is " +
                         std::to_string(mf.class_count));
  }

  const json& samples = require(root, "samples", "manifest");
  if (!samples.is_array()) throw ManifestError("samples must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const json& js = samples[i];
    SampleBundle s;
    s.sample_id = get_as<std::string>(require(js, "id", "samples[" + std::to_string(i) + "]"),
                                      "sample id");
    const std::string where = "sample " + s.sample_id;
    if (!ids.insert(s.sample_id).second) {
      throw ManifestError(where + ": duplicate sample id");
    }
    s.image = reader.convert(require(js, "image", where), where + ".image", to_image);
    s.forward = read_artifacts(js, reader, where);
    if (auto it = js.find("object_mask"); it != js.end() && !it->is_null()) {
      s.object_mask = reader.convert(*it, where + ".object_mask", to_mask);
    }
    if (auto it = js.find("parts"); it != js.end()) {
      for (const auto& jp : *it) {
        PartPoint p;
        p.part_id = get_as<int>(require(jp, "part_id", where), where + ".part_id");
        p.row = get_as<double>(require(jp, "row", where), where + ".row");
        p.col = get_as<double>(require(jp, "col", where), where + ".col");
        p.visible = jp.value("visible", true);
        s.parts.push_back(p);
      }
    }
    s.labels = get_as<std::vector<int>>(require(js, "labels", where), where + ".labels");
    std::sort(s.labels.begin(), s.labels.end());
    if (std::adjacent_find(s.labels.begin(), s.labels.end()) != s.labels.end()) {
      violations.push_back(where + ": duplicate labels");
      s.labels.erase(std::unique(s.labels.begin(), s.labels.end()), s.labels.end());
    }
    if (auto it = js.find("perturbed"); it != js.end()) {
      for (std::size_t j = 0; j < it->size(); ++j) {
        const json& jp = (*it)[j];
        const std::string pw = where + ".perturbed[" + std::to_string(j) + "]";
        PerturbedEntry e;
        e.kind = parse_kind(get_as<std::string>(require(jp, "kind", pw), pw), pw);
        if (auto pit = jp.find("prototype"); pit != jp.end() && !pit->is_null()) {
          e.prototype = get_as<std::size_t>(*pit, pw + ".prototype");
        }
        e.artifacts = read_artifacts(jp, reader, pw);
        s.perturbed.push_back(std::move(e));
      }
    }
    auto sv = validate_sample(s, model, mf);
    violations.insert(violations.end(), sv.begin(), sv.end());
    ds.samples.push_back(std::move(s));
  }
  if (!violations.empty()) throw BundleValidationError(std::move(violations));
  return ds;
}

fs::path save_bundle(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const Manifest& mf = ds.manifest;
  const ModelBundle& model = ds.model;
  json root;
  root["format_version"] = 1;
  root["dataset_name"] = mf.dataset_name;
  root["class_count"] = mf.class_count;
  root["multilabel"] = mf.multilabel;
  root["part_vocabulary"] = mf.part_vocabulary;
  root["saliency_source"] =
      mf.saliency_source == SaliencySource::kProvided ? "provided" : "upsample";
  root["perturbed_artifacts"] =
      mf.perturbed_artifacts == PerturbedArtifactMode::kRegenerate ? "regenerate"
                                                                   : "preexported";

  json jm;
  jm["kind"] = to_string(model.kind);
  jm["similarity_epsilon"] = model.similarity_epsilon;
  jm["classifier_weights"] = tensor_ref(dir, "model/classifier_weights.qpt",
                                        tensor_from(model.classifier_weights));
  if (!model.prototypes.empty()) {
    Map2d p(model.prototypes.size(), model.prototypes.front().size());
    for (std::size_t r = 0; r < p.rows; ++r) {
      std::copy(model.prototypes[r].begin(), model.prototypes[r].end(),
                p.values.begin() + static_cast<std::ptrdiff_t>(r * p.cols));
    }
    jm["prototypes"] = tensor_ref(dir, "model/prototypes.qpt", tensor_from(p));
  }
  if (!model.slot_assignment.empty()) {
    const std::size_t k = model.slot_assignment.size();
    const std::size_t l = model.slots_per_class();
    const std::size_t n = model.prototype_count();
    std::vector<float> data;
    for (const auto& cls : model.slot_assignment) {
      for (const auto& q : cls) data.insert(data.end(), q.begin(), q.end());
    }
    jm["slot_assignment"] = tensor_ref(
        dir, "model/slot_assignment.qpt",
        make_tensor({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(l),
                     static_cast<std::uint32_t>(n)},
                    std::move(data)));
  }
  if (!model.class_of_prototype.empty()) {
    jm["class_of_prototype"] = model.class_of_prototype;
  }
  root["model"] = jm;

  json samples = json::array();
  for (const auto& s : ds.samples) {
    const fs::path prefix = fs::path("samples") / s.sample_id;
    json js = write_artifacts(s.forward, dir, prefix);
    js["id"] = s.sample_id;
    js["image"] = tensor_ref(dir, prefix / "image.qpt", tensor_from(s.image));
    if (s.object_mask) {
      Map2d m(s.object_mask->rows, s.object_mask->cols);
      for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = s.object_mask->values[i];
      js["object_mask"] = tensor_ref(dir, prefix / "object_mask.qpt", tensor_from(m));
    }
    json parts = json::array();
    for (const auto& p : s.parts) {
      parts.push_back({{"part_id", p.part_id}, {"row", p.row}, {"col", p.col},
                       {"visible", p.visible}});
    }
    js["parts"] = parts;
    js["labels"] = s.labels;
    json perturbed = json::array();
    for (std::size_t j = 0; j < s.perturbed.size(); ++j) {
      const auto& e = s.perturbed[j];
      std::string tag = to_string(e.kind);
      if (e.prototype) tag += "_" + std::to_string(*e.prototype);
      json je = write_artifacts(e.artifacts, dir, prefix / "perturbed" / tag);
      je["kind"] = to_string(e.kind);
      if (e.prototype) je["prototype"] = *e.prototype;
      perturbed.push_back(je);
    }
    if (!perturbed.empty()) js["perturbed"] = perturbed;
    samples.push_back(js);
  }
  root["samples"] = samples;

  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest.string());
  out << root.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + manifest.string());
  return manifest;
}

}  // namespace protoeval
