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

#include "fixtures.h"

#include <unistd.h>
#include <string>

#include "protoeval/perturb.h"
#include "protoeval/proto_kernel.h"

namespace fixture {

using protoeval::FeatureMap;
using protoeval::Image;
using protoeval::ModelKind;

namespace {

constexpr double kGray = 0.5;

std::vector<double> prototype_vector(std::size_t m) {
  double rgb[3];
  colour(m, rgb);
  return {rgb[0] * kCellSide, rgb[1] * kCellSide, rgb[2] * kCellSide};
}

void paint_cell(Image& img, protoeval::Mask& mask, std::size_t cell_r, std::size_t cell_c,
                std::size_t colour_index) {
  double rgb[3];
  colour(colour_index, rgb);
  for (std::size_t r = cell_r * kCellSide; r < (cell_r + 1) * kCellSide; ++r) {
    for (std::size_t c = cell_c * kCellSide; c < (cell_c + 1) * kCellSide; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = rgb[ch];
      mask.at(r, c) = 1;
    }
  }
}

protoeval::ModelBundle make_model(ModelKind kind) {
  protoeval::ModelBundle m;
  m.kind = kind;
  if (kind != ModelKind::kIndirect) {
    for (std::size_t i = 0; i < kPrototypes; ++i) m.prototypes.push_back(prototype_vector(i));
  }
  if (kind == ModelKind::kExplicitShared) {
    // Two one-hot slots per class, each class weighting only its own slots.
    m.slot_assignment.assign(kClasses, std::vector<std::vector<double>>(
                                           2, std::vector<double>(kPrototypes, 0.0)));
    m.classifier_weights = protoeval::Grid<double>(kClasses, 2, 1.0);
    for (std::size_t c = 0; c < kClasses; ++c) {
      m.slot_assignment[c][0][2 * c] = 1.0;
      m.slot_assignment[c][1][2 * c + 1] = 1.0;
    }
    return m;
  }
  m.classifier_weights = protoeval::Grid<double>(kClasses, kPrototypes, 0.0);
  for (std::size_t i = 0; i < kPrototypes; ++i) m.classifier_weights.at(i / 2, i) = 1.0;
  if (kind == ModelKind::kExplicitClassSpecific) {
    for (std::size_t i = 0; i < kPrototypes; ++i) {
      m.class_of_prototype.push_back(static_cast<int>(i / 2));
    }
  }
  return m;
}

}  // namespace

void colour(std::size_t index, double rgb[3]) {
  static constexpr double kColours[kPrototypes][3] = {
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}};
  for (int ch = 0; ch < 3; ++ch) rgb[ch] = kColours[index][ch];
}

FeatureMap pool_backbone(const Image& image) {
  const std::size_t h = image.height / kCellSide, w = image.width / kCellSide;
  FeatureMap f(h, w, 3);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      auto cell = f.cell((r / kCellSide) * w + c / kCellSide);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        cell[ch] += image.at(r, c, ch) / static_cast<double>(kCellSide);
      }
    }
  }
  return f;
}

FeatureMap channel_backbone(const Image& image) {
  const FeatureMap pooled = pool_backbone(image);
  FeatureMap f(pooled.height, pooled.width, kPrototypes);
  for (std::size_t i = 0; i < pooled.cell_count(); ++i) {
    for (std::size_t m = 0; m < kPrototypes; ++m) {
      f.cell(i)[m] = -protoeval::squared_l2(pooled.cell(i), prototype_vector(m));
    }
  }
  return f;
}

protoeval::BackboneForwardSource::Backbone backbone_for(ModelKind kind) {
  if (kind == ModelKind::kIndirect) return channel_backbone;
  return pool_backbone;
}

protoeval::Dataset make_dataset(const Options& options) {
  protoeval::Dataset d;
  d.manifest.dataset_name = "synthetic";
  d.manifest.class_count = static_cast<int>(kClasses);
  d.manifest.multilabel = options.multilabel;
  d.manifest.saliency_source = options.saliency;
  d.manifest.perturbed_artifacts = protoeval::PerturbedArtifactMode::kRegenerate;
  for (int p = 0; p < static_cast<int>(kPrototypes); ++p) d.manifest.part_vocabulary.push_back(p);
  d.model = make_model(options.kind);
  const auto backbone = backbone_for(options.kind);

  protoeval::Rng rng(options.seed);
  for (std::size_t i = 0; i < options.samples; ++i) {
    protoeval::SampleBundle s;
    s.sample_id = "s" + std::to_string(i);
    s.image = Image(kImageSide, kImageSide, kGray);
    protoeval::Mask mask(kImageSide, kImageSide, 0);

    const std::size_t cls = i % kClasses;
    std::size_t colours[2] = {2 * cls, 2 * cls + 1};
    s.labels = {static_cast<int>(cls)};
    if (options.multilabel) {
      const std::size_t other = (cls + 1) % kClasses;
      colours[1] = 2 * other;
      s.labels = {static_cast<int>(std::min(cls, other)), static_cast<int>(std::max(cls, other))};
    }
    const std::size_t cells = kGridSide * kGridSide;
    const auto a = static_cast<std::size_t>(rng.below(cells));
    auto b = static_cast<std::size_t>(rng.below(cells - 1));
    if (b >= a) ++b;
    const std::size_t at[2] = {a, b};
    for (int k = 0; k < 2; ++k) {
      const std::size_t cr = at[k] / kGridSide, cc = at[k] % kGridSide;
      paint_cell(s.image, mask, cr, cc, colours[k]);
      s.parts.push_back({static_cast<int>(colours[k]),
                         static_cast<double>(cr * kCellSide) + 2.0,
                         static_cast<double>(cc * kCellSide) + 2.0, true});
    }
    s.object_mask = mask;
    s.forward = protoeval::forward_from_features(d.model, backbone(s.image));
    if (options.saliency == protoeval::SaliencySource::kProvided) {
      protoeval::Map2d sal(kImageSide, kImageSide, 0.0);
      for (std::size_t j = 0; j < mask.size(); ++j) sal.values[j] = mask.values[j];
      for (std::size_t p = 0; p < kPrototypes; ++p) s.forward.saliency_maps[p] = sal;
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

void attach_perturbed(protoeval::Dataset& dataset, const protoeval::SuiteConfig& config) {
  const auto backbone = backbone_for(dataset.model.kind);
  const auto records = protoeval::generate_perturbations(dataset, config);
  for (const auto& r : records) {
    for (auto& s : dataset.samples) {
      if (s.sample_id != r.sample_id) continue;
      protoeval::PerturbedEntry e;
      e.kind = r.kind;
      e.prototype = r.prototype;
      e.artifacts.feature_map = backbone(r.image);
      s.perturbed.push_back(std::move(e));
    }
  }
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("protoeval_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
