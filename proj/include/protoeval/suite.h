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

#ifndef PROTOEVAL_SUITE_H_
#define PROTOEVAL_SUITE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "protoeval/errors.h"
#include "protoeval/interchange.h"
#include "protoeval/perturb.h"
#include "protoeval/report.h"

namespace protoeval {

enum class Suite {
  kCompleteness,
  kContinuity,
  kContrastivity,
  kComplexity,
  kCompactness,
  kPerformance,
};

std::string to_string(Suite suite);
Suite parse_suite(const std::string& text);
std::vector<Suite> all_suites();

// Environment variable read for the default worker count.
inline constexpr const char* kParallelismEnv = "PROTOEVAL_PARALLELISM";

struct SuiteConfig {
  std::set<Suite> suites;
  PerturbationConfig perturbation;
  std::size_t top_k = 5;
  double epsilon = 1e-3;   // compactness weight threshold
  double mu = 0.1;         // local size threshold
  std::size_t entropy_bins = 10;
  std::size_t performance_k = 3;
  std::size_t parallelism = 1;
  std::string label;
  std::string grouping = "single";

  // Throws ValidationError for out-of-range fields.
  void validate() const;
};

// Parses a JSON config. Missing fields keep their defaults; a missing
// "parallelism" falls back to PROTOEVAL_PARALLELISM, then 1. Throws
// ManifestError on malformed JSON or unknown keys.
SuiteConfig parse_suite_config(const std::string& text);
SuiteConfig load_suite_config(const std::filesystem::path& path);

// Canonical JSON of every field except parallelism, which never affects
// results.
std::string suite_config_to_json(const SuiteConfig& config);

// FNV-1a 64 of suite_config_to_json, as 16 hex digits.
std::string config_hash(const SuiteConfig& config);

// A per-entity artifact shortfall; run_suite records it as a skip.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// Supplies model-side artifacts for a perturbed input.
class ForwardSource {
 public:
  virtual ~ForwardSource() = default;
  // `identity` is set when the perturbed image equals the original by
  // construction. Throws MissingArtifactError when nothing is available.
  virtual ForwardArtifacts forward(const SampleBundle& sample, PerturbationKind kind,
                                   std::optional<std::size_t> prototype,
                                   const Image& perturbed, bool identity) const = 0;
};

// Reads perturbed-side artifacts from the bundle. In regenerate mode entries
// carrying a feature map are pushed through forward_from_features; otherwise
// the stored maps, scores and output are used as is. Identity perturbations
// without an entry reuse the original artifacts.
class ManifestForwardSource : public ForwardSource {
 public:
  ManifestForwardSource(const ModelBundle& model, const Manifest& manifest)
      : model_(model), manifest_(manifest) {}
  ForwardArtifacts forward(const SampleBundle& sample, PerturbationKind kind,
                           std::optional<std::size_t> prototype, const Image& perturbed,
                           bool identity) const override;

 private:
  const ModelBundle& model_;
  const Manifest& manifest_;
};

// Runs an in-process backbone on the perturbed image, then the prototype
// layer. The backbone must be thread-safe.
class BackboneForwardSource : public ForwardSource {
 public:
  using Backbone = std::function<FeatureMap(const Image&)>;
  BackboneForwardSource(const ModelBundle& model, Backbone backbone)
      : model_(model), backbone_(std::move(backbone)) {}
  ForwardArtifacts forward(const SampleBundle& sample, PerturbationKind kind,
                           std::optional<std::size_t> prototype, const Image& perturbed,
                           bool identity) const override;

 private:
  const ModelBundle& model_;
  Backbone backbone_;
};

// Saliency of `prototype` at image resolution: the provided map, or the
// upscaled similarity map when the manifest asks for upsampling. Throws
// MissingArtifactError when a provided map is absent.
Map2d resolve_saliency(const ForwardArtifacts& artifacts, std::size_t prototype,
                       std::size_t height, std::size_t width, SaliencySource source);

// One perturbed input as consumed by the adapter and by run_suite.
struct PerturbationRecord {
  std::string sample_id;
  PerturbationKind kind = PerturbationKind::kContinuity;
  std::optional<std::size_t> prototype;
  std::optional<BoundingBox> box;  // completeness only
  std::uint64_t seed = 0;
  Image image;
};

// Completeness input for (sample, prototype): occlusion outside the
// percentile box of the original saliency. Throws on degenerate saliency.
PerturbationRecord completeness_perturbation(const SampleBundle& sample,
                                             std::size_t prototype,
                                             const SuiteConfig& config,
                                             SaliencySource source);

// Continuity input for a sample: the full photometric suite.
PerturbationRecord continuity_perturbation(const SampleBundle& sample,
                                           const SuiteConfig& config);

// Every perturbed input the requested change suites need: completeness per
// top-k prototype, continuity per sample. Entities whose input cannot be built
// are appended to `skipped`.
std::vector<PerturbationRecord> generate_perturbations(
    const Dataset& dataset, const SuiteConfig& config,
    std::vector<SkippedEntity>* skipped = nullptr);

// Evaluates the requested suites. Results do not depend on
// config.parallelism. Throws SuiteError when a requested suite has no usable
// artifact of a required class anywhere in the dataset.
MetricReport run_suite(const Dataset& dataset, const SuiteConfig& config,
                       const ForwardSource& source);

// Convenience overload using ManifestForwardSource.
MetricReport run_suite(const Dataset& dataset, const SuiteConfig& config);

// Calls fn(i) for i in [0, count) on up to `workers` threads. If any call
// throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace protoeval

#endif  // PROTOEVAL_SUITE_H_
