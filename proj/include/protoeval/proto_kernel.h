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

#ifndef PROTOEVAL_PROTO_KERNEL_H_
#define PROTOEVAL_PROTO_KERNEL_H_

#include <cstddef>
#include <span>
#include <vector>

#include "protoeval/interchange.h"
#include "protoeval/types.h"

namespace protoeval {

inline constexpr double kDefaultSimilarityEpsilon = 1e-4;

// log((d^2 + 1) / (d^2 + epsilon)) for one squared distance.
double log_similarity(double squared_distance, double epsilon);

double squared_l2(std::span<const double> a, std::span<const double> b);

// Per-cell log similarity between `prototype` and every cell of `features`.
// Requires epsilon in (0, 1); throws ShapeError on a depth mismatch.
Map2d similarity_map(const FeatureMap& features,
                     std::span<const double> prototype, double epsilon);

// Max over all cells. Throws ShapeError on an empty map.
double max_pool_score(const Map2d& map);

// ProtoPool focal similarity: max(a) - mean(a).
double focal_similarity(const Map2d& map);

// Slot value g_l = sum_i q_l^i g_i. The distribution must sum to 1 (1e-5).
double slot_aggregate(std::span<const double> slot_distribution,
                      std::span<const double> focal_scores);

// PIPNet: the D channels of `features` read as D similarity maps after a
// softmax across channels at every cell.
std::vector<Map2d> pipnet_prototype_maps(const FeatureMap& features);

// log((score * weight)^2 + 1). Negative weights throw ValidationError.
double pipnet_output(double score, double weight);

// Class logits. Explicit models: weights * scores. Indirect models: per row
// the sum of pipnet_output(score_j, w_kj). `scores` must have weights.cols
// entries.
std::vector<double> classify(std::span<const double> scores,
                             const Grid<double>& weights, ModelKind kind);

// Nearest candidate per prototype (lowest storage index wins ties).
// candidates[m] is the candidate set of prototype m.
std::vector<std::vector<double>> project_prototypes(
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::vector<double>>>& candidates);

// Full forward pass from a feature map: similarity maps, max-pooled scores
// and logits, following the model kind.
ForwardArtifacts forward_from_features(const ModelBundle& model,
                                       const FeatureMap& features);

// Largest |regenerated score - stored score| over the sample's prototypes,
// or a negative value when the sample has no feature map.
double regeneration_error(const ModelBundle& model, const SampleBundle& sample);

// --- Losses (evaluation only; nothing here is differentiated) ---------------

enum class LossKind { kCluster, kSeparation, kMargin, kOrthogonal };

struct LossValue {
  double value = 0.0;
  LossKind kind = LossKind::kCluster;
};

struct LossSample {
  FeatureMap features;
  std::vector<int> labels;  // assigned classes C_{y_i}
};

// class_prototypes[k] lists the prototype indices belonging to class k.
LossValue cluster_loss_multilabel(
    std::span<const LossSample> samples,
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::size_t>>& class_prototypes);

LossValue separation_loss_multilabel(
    std::span<const LossSample> samples,
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::size_t>>& class_prototypes);

// (1/K) sum_{j in Y} sum_{i not in Y} max(0, 1 - (o_j - o_i)).
LossValue margin_loss_multilabel(std::span<const double> output,
                                 std::span<const int> label_set,
                                 std::size_t class_count);

// Mean cosine similarity over all unordered pairs of slot distributions.
LossValue orthogonal_loss(const std::vector<std::vector<double>>& slots);

// Groups prototype indices by owning class.
std::vector<std::vector<std::size_t>> prototypes_by_class(
    std::span<const int> class_of_prototype, std::size_t class_count);

}  // namespace protoeval

#endif  // PROTOEVAL_PROTO_KERNEL_H_
