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

#ifndef PROTOEVAL_METRICS_CHANGE_H_
#define PROTOEVAL_METRICS_CHANGE_H_

#include <cstddef>
#include <span>

#include "protoeval/types.h"

// Original-vs-perturbed change metrics for the output-completeness and
// continuity protocols. Every metric returns exactly 0 for identical inputs.

namespace protoeval {

// 1 - IoU of two boxes on the same grid.
double vlc(const BoundingBox& a, const BoundingBox& b);

// |s - s_pert| / s. Throws ValidationError unless s > 0.
double psc(double score, double perturbed_score);

// 1 - sum(min)/sum(max) over the two saliency maps flattened and sorted in
// descending order. Throws DegenerateSaliencyError if both are all zero.
double vac(const Map2d& a, const Map2d& b);

// Manhattan distance between the argmax cells (row-major first on ties).
double plc(const Map2d& a, const Map2d& b);

// 1 - IoU of the binarized maps.
double palc(const Map2d& a, const Map2d& b);

// Like vac but elementwise without sorting.
double pac(const Map2d& a, const Map2d& b);

// |rank_b - rank_a|.
int prc(int rank_a, int rank_b);

// 1 - sum(min)/sum(max) over class logits; logits must be nonnegative.
double cac(std::span<const double> a, std::span<const double> b);

// Rank shift of the originally predicted class.
int crc(std::span<const double> a, std::span<const double> b);

// 1-based rank of `index` under descending value, lower index first on ties.
int descending_rank(std::span<const double> values, std::size_t index);

// First maximal cell in row-major order.
Cell argmax_cell(const Map2d& map);

// |a AND b| / |a OR b|; two empty masks give 1.
double mask_iou(const Mask& a, const Mask& b);

}  // namespace protoeval

#endif  // PROTOEVAL_METRICS_CHANGE_H_
