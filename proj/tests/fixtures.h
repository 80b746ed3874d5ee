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

// Synthetic bundles with planted, class-pure structure.
//
// Images are 28x28 gray canvases carrying two 4x4 coloured patches aligned to
// the 4x4 pooling grid. Class c owns colours 2c and 2c+1 out of six
// saturated colours. The explicit backbone average-pools 4x4 blocks and
// scales by 4, so every patch maps to exactly one pure feature cell and the
// six prototypes are those pure cells.

#ifndef PROTOEVAL_TESTS_FIXTURES_H_
#define PROTOEVAL_TESTS_FIXTURES_H_

#include <cstdint>
#include <filesystem>

#include "protoeval/interchange.h"
#include "protoeval/suite.h"

namespace fixture {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kCellSide = 4;
inline constexpr std::size_t kGridSide = kImageSide / kCellSide;
inline constexpr std::size_t kClasses = 3;
inline constexpr std::size_t kPrototypes = 6;

struct Options {
  std::size_t samples = 6;
  protoeval::ModelKind kind = protoeval::ModelKind::kExplicitClassSpecific;
  protoeval::SaliencySource saliency = protoeval::SaliencySource::kProvided;
  bool multilabel = false;
  std::uint64_t seed = 7;
};

// RGB of colour index 0..5 (red, green, blue, yellow, cyan, magenta).
void colour(std::size_t index, double rgb[3]);

// 4x4 average pooling scaled by 4: 28x28x3 -> 7x7x3.
protoeval::FeatureMap pool_backbone(const protoeval::Image& image);

// Indirect-model backbone: channel m of each cell is -|pooled - prototype_m|^2.
protoeval::FeatureMap channel_backbone(const protoeval::Image& image);

protoeval::BackboneForwardSource::Backbone backbone_for(protoeval::ModelKind kind);

protoeval::Dataset make_dataset(const Options& options = {});

// Simulates the adapter: runs the backbone on every perturbed input the
// config asks for and stores the resulting feature maps as perturbed entries
// (regenerate mode).
void attach_perturbed(protoeval::Dataset& dataset, const protoeval::SuiteConfig& config);

// A fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixture

#endif  // PROTOEVAL_TESTS_FIXTURES_H_
