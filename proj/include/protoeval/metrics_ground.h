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

#ifndef PROTOEVAL_METRICS_GROUND_H_
#define PROTOEVAL_METRICS_GROUND_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "protoeval/interchange.h"
#include "protoeval/types.h"

// Covariate-complexity (mask and part grounding), compactness (classifier
// structure) and general performance metrics.

namespace protoeval {

inline constexpr double kWeightEpsilon = 1e-3;
inline constexpr double kLocalSizeMu = 0.1;

// |v AND m| / |m|. Throws ValidationError for an empty object mask.
double object_overlap(const Mask& saliency_mask, const Mask& object_mask);

// 1 - |v AND m| / |v|. Throws EmptyMaskError for an empty saliency mask.
double background_overlap(const Mask& saliency_mask, const Mask& object_mask);

// Mean positive max-normalised saliency inside the object minus the same
// outside it; a side without positive values contributes 0.
double iord(const Map2d& saliency, const Mask& object_mask);

// Per prototype: in how many images each part fell inside its box.
struct PartHistogram {
  std::map<int, std::size_t> counts;
  std::size_t image_count = 0;
};

// Records one image: every visible part whose pixel lies inside `box` counts
// once. image_count is incremented.
void accumulate_parts(PartHistogram& histogram, const BoundingBox& box,
                      std::span<const PartPoint> parts);

// Mean over the vocabulary of count / image_count.
double consistency(const PartHistogram& histogram, std::span<const int> vocabulary);

// Columns with at least one |w| > epsilon.
std::size_t global_size(const Grid<double>& weights, double epsilon = kWeightEpsilon);

// Fraction of weights with |w| <= epsilon.
double sparsity(const Grid<double>& weights, double epsilon = kWeightEpsilon);

// #{w < -eps} / #{w > eps}; 0 when neither exists, nullopt (undefined) when
// only negative weights exist.
std::optional<double> npr(const Grid<double>& weights, double epsilon = kWeightEpsilon);

// Scores whose max-normalised value exceeds mu.
std::size_t local_size(std::span<const double> scores, double mu = kLocalSizeMu);

// ProtoPool presence matrix: entry (k, i) = sum over the class's slots of q_l^i.
Grid<double> presence_matrix(
    const std::vector<std::vector<std::vector<double>>>& slot_assignment);

struct Performance {
  double accuracy = 0.0;
  std::optional<double> topk_accuracy;  // single-label only
  double f1 = 0.0;                      // macro (single) / micro (multi)
};

// Single-label: argmax accuracy, top-k accuracy and macro-F1 over classes
// present in labels or predictions. Multi-label: subset accuracy and micro-F1
// with logits > threshold predicted positive.
Performance performance(const std::vector<std::vector<double>>& outputs,
                        const std::vector<std::vector<int>>& labels,
                        bool multilabel, std::size_t k = 3,
                        double threshold = 0.0);

}  // namespace protoeval

#endif  // PROTOEVAL_METRICS_GROUND_H_
