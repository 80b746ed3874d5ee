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

#ifndef PROTOEVAL_INTERCHANGE_H_
#define PROTOEVAL_INTERCHANGE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protoeval/errors.h"
#include "protoeval/types.h"

namespace protoeval {

// ---------------------------------------------------------------------------
// TensorFile container
//
//   magic  "QPT1"
//   rank   u32 little-endian, 1..4
//   dims   rank x u32 little-endian, each >= 1
//   data   product(dims) x float32 little-endian, row-major
// ---------------------------------------------------------------------------

inline constexpr char kTensorMagic[4] = {'Q', 'P', 'T', '1'};
inline constexpr std::size_t kMaxTensorRank = 4;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

// Conversions between the stored float32 container and the float64 working
// types. The `to_*` functions throw ShapeError on a rank or extent mismatch.
Tensor make_tensor(std::vector<std::uint32_t> dims, std::vector<float> data);
Tensor tensor_from(const Map2d& map);
Tensor tensor_from(const std::vector<Map2d>& maps);  // n x H x W
Tensor tensor_from(const Image& image);              // H x W x 3
Tensor tensor_from(const FeatureMap& features);      // H x W x D
Tensor tensor_from(std::span<const double> values);  // rank 1

Map2d to_map(const Tensor& tensor);
std::vector<Map2d> to_maps(const Tensor& tensor);
Image to_image(const Tensor& tensor);
FeatureMap to_feature_map(const Tensor& tensor);
std::vector<double> to_vector(const Tensor& tensor);

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

enum class ModelKind { kExplicitClassSpecific, kExplicitShared, kIndirect };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct PartPoint {
  int part_id = 0;
  double row = 0.0;
  double col = 0.0;
  bool visible = true;
};

// Model-side quantities for one forward pass over one input image.
struct ForwardArtifacts {
  std::optional<FeatureMap> feature_map;
  std::vector<Map2d> similarity_maps;
  std::vector<double> similarity_scores;
  // Keyed by prototype index; saliency maps are optional per prototype.
  std::map<std::size_t, Map2d> saliency_maps;
  std::vector<double> output;
};

enum class PerturbationKind { kCompleteness, kContinuity };

std::string to_string(PerturbationKind kind);

// Adapter-supplied artifacts for one perturbed counterpart of a sample.
// Completeness entries are keyed by prototype; continuity entries are not.
struct PerturbedEntry {
  PerturbationKind kind = PerturbationKind::kContinuity;
  std::optional<std::size_t> prototype;
  ForwardArtifacts artifacts;
};

struct SampleBundle {
  std::string sample_id;
  Image image;
  ForwardArtifacts forward;
  std::optional<Mask> object_mask;
  std::vector<PartPoint> parts;
  std::vector<int> labels;  // sorted, unique
  std::vector<PerturbedEntry> perturbed;

  const PerturbedEntry* find_perturbed(
      PerturbationKind kind, std::optional<std::size_t> prototype) const;
};

struct ModelBundle {
  ModelKind kind = ModelKind::kExplicitClassSpecific;
  // n x D prototype vectors; empty for indirect models.
  std::vector<std::vector<double>> prototypes;
  // K x L x n slot distributions; empty unless explicit-shared.
  std::vector<std::vector<std::vector<double>>> slot_assignment;
  // K x C where C is n (class-specific, indirect), L or K*L (shared).
  Grid<double> classifier_weights;
  // Owning class per prototype; only for explicit-class-specific models.
  std::vector<int> class_of_prototype;
  double similarity_epsilon = 1e-4;

  std::size_t class_count() const { return classifier_weights.rows; }
  std::size_t prototype_count() const;
  std::size_t slots_per_class() const;
  bool is_explicit() const { return kind != ModelKind::kIndirect; }
};

enum class SaliencySource { kProvided, kUpsample };
enum class PerturbedArtifactMode { kRegenerate, kPreexported };

struct Manifest {
  std::string dataset_name;
  int class_count = 0;
  std::vector<int> part_vocabulary;
  bool multilabel = false;
  SaliencySource saliency_source = SaliencySource::kProvided;
  PerturbedArtifactMode perturbed_artifacts =
      PerturbedArtifactMode::kRegenerate;
  std::filesystem::path path;  // the manifest file itself
};

struct Dataset {
  Manifest manifest;
  ModelBundle model;
  std::vector<SampleBundle> samples;
};

// Every violated invariant found while validating a bundle, each prefixed
// with the offending sample id or "model".
class BundleValidationError : public ValidationError {
 public:
  explicit BundleValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Loads and fully validates a manifest and every file it references.
// Throws ManifestError for schema/file problems and BundleValidationError
// listing all invariant violations otherwise.
Dataset load_bundle(const std::filesystem::path& manifest_path);

// Writes every array of `dataset` as a TensorFile under `directory` and a
// manifest.json referencing them by relative path. Returns the manifest path.
std::filesystem::path save_bundle(const Dataset& dataset,
                                  const std::filesystem::path& directory);

// Invariant checks used by load_bundle; exposed for bundles built in memory.
std::vector<std::string> validate_model(const ModelBundle& model);
std::vector<std::string> validate_sample(const SampleBundle& sample,
                                         const ModelBundle& model,
                                         const Manifest& manifest);

}  // namespace protoeval

#endif  // PROTOEVAL_INTERCHANGE_H_
