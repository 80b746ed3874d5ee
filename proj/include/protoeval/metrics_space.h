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

#ifndef PROTOEVAL_METRICS_SPACE_H_
#define PROTOEVAL_METRICS_SPACE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "protoeval/types.h"

// Contrastivity metrics: embedding-space set distances, activation entropy
// and within-sample location contrast.

namespace protoeval {

// A vector carrying an identity. Set differences (P \ P_k, P_k \ p_i) are
// taken by id, so a shared prototype listed under several classes is never
// its own "other-class" neighbour.
struct TaggedVector {
  std::size_t id = 0;
  std::vector<double> values;
};

// Per class k, the member vectors of P_k (or F_k).
using ClassVectorSets = std::vector<std::vector<TaggedVector>>;

// Wraps plain per-class vector lists, giving every vector a distinct id.
ClassVectorSets tag_sets(const std::vector<std::vector<std::vector<double>>>& sets);

struct SetDistance {
  double value = 0.0;
  std::vector<std::size_t> skipped_classes;
};

double cosine_distance(std::span<const double> a, std::span<const double> b);

// Mean over classes of the mean over members of the mean cosine distance to
// every vector outside the class. Classes that are empty or have an empty
// complement are skipped. Needs at least two populated classes.
SetDistance mean_cosine_distance_inter(const ClassVectorSets& sets);

// Mean over classes of the mean over members of the mean cosine distance to
// the other members of the same class. Singleton classes are skipped; throws
// ValidationError if every class is skipped.
SetDistance mean_cosine_distance_intra(const ClassVectorSets& sets);

inline constexpr std::size_t kEntropyBins = 10;

// Shannon entropy (natural log) of the histogram of max-normalised scores
// over `bins` equal-width bins on [0, 1]. Throws DegenerateSeriesError when
// the maximum is not positive.
double activation_entropy(std::span<const double> scores,
                          std::size_t bins = kEntropyBins);

// Mean Manhattan distance between argmax cells over unordered map pairs.
double pairwise_plc_contra(const std::vector<Map2d>& maps);

// Mean (1 - IoU) of binarized maps over unordered pairs.
double pairwise_palc_contra(const std::vector<Map2d>& maps);

struct TopPrototypes {
  std::vector<std::size_t> ids;  // descending score, lower index on ties
  std::size_t shortfall = 0;     // requested minus available
};

TopPrototypes top_prototypes(std::span<const double> scores, std::size_t k = 5);

}  // namespace protoeval

#endif  // PROTOEVAL_METRICS_SPACE_H_
