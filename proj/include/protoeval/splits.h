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

#ifndef PROTOEVAL_SPLITS_H_
#define PROTOEVAL_SPLITS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "protoeval/types.h"

// Dataset partitioning: stratified hold-out plus k-fold, and a context-shift
// split driven by background colour statistics.

namespace protoeval {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

struct StratifiedSplit {
  std::vector<std::size_t> test;
  std::vector<Fold> folds;
};

inline constexpr std::size_t kMinSamplesPerClass = 8;

// Per class: shuffle, hold out round(test_fraction * n) for test, then deal
// the remainder into `fold_count` near-equal chunks (the remainder's extra
// samples rotate with the class index so fold totals stay balanced). Fold f
// validates on chunk f and trains on the rest. Every index list is sorted.
// Throws ValidationError for fewer than two classes or a class smaller than
// kMinSamplesPerClass (the message names the class).
StratifiedSplit stratified_splits(std::span<const int> labels, std::uint64_t seed,
                                  double test_fraction = 0.3,
                                  std::size_t fold_count = 4);

// Non-normative heuristic; every knob is exposed.
struct HsvSplitConfig {
  double border_fraction = 0.2;
  std::size_t hue_bins = 8;
  std::size_t saturation_bins = 8;
  std::size_t restarts = 20;
  std::size_t max_iterations = 100;
  double fallback_test_fraction = 0.3;
};

struct HsvSplit {
  std::vector<std::size_t> trainval;
  std::vector<std::size_t> test;
  std::vector<int> fallback_classes;  // classes split at random (degenerate)
};

// Normalised hue x saturation histogram of the border frame (pixels within
// border_fraction of any edge). Row-major [hue][saturation].
std::vector<double> border_histogram(const Image& image, const HsvSplitConfig& config = {});

// Per class: 2-means over border histograms (seeded restarts, lowest inertia
// kept); the smaller cluster becomes test, ties send the cluster without the
// class's first image to test. Classes whose histograms are all identical
// fall back to a seeded random split and are listed in fallback_classes.
// Throws ValidationError when a class has fewer than two images.
HsvSplit hsv_context_split(const std::vector<Image>& images, std::span<const int> labels,
                           std::uint64_t seed, const HsvSplitConfig& config = {});

}  // namespace protoeval

#endif  // PROTOEVAL_SPLITS_H_
