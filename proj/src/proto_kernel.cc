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

#include "protoeval/proto_kernel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace protoeval {
namespace {

constexpr double kDistributionTolerance = 1e-5;

double min_cell_distance(const FeatureMap& features,
                         std::span<const double> prototype) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < features.cell_count(); ++c) {
    best = std::min(best, squared_l2(features.cell(c), prototype));
  }
  return best;
}

void check_prototype_dims(const FeatureMap& features,
                          const std::vector<std::vector<double>>& prototypes) {
  for (const auto& p : prototypes) {
    if (p.size() != features.depth) {
      throw ShapeError("prototype dimension " + std::to_string(p.size()) +
                       " differs from feature depth " +
                       std::to_string(features.depth));
    }
  }
}

// Mean over samples of the mean over assigned classes of `per_class`.
template <typename PerClass>
double mean_over_assignments(std::span<const LossSample> samples,
                             PerClass per_class) {
  if (samples.empty()) throw ValidationError("loss needs at least one sample");
  double total = 0.0;
  for (const auto& s : samples) {
    if (s.labels.empty()) {
      throw ValidationError("loss sample without assigned classes");
    }
    double acc = 0.0;
    for (int k : s.labels) acc += per_class(s, k);
    total += acc / static_cast<double>(s.labels.size());
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

double log_similarity(double squared_distance, double epsilon) {
  return std::log((squared_distance + 1.0) / (squared_distance + epsilon));
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("vector length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

Map2d similarity_map(const FeatureMap& features,
                     std::span<const double> prototype, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError("similarity epsilon must lie in (0, 1)");
  }
  if (prototype.size() != features.depth) {
    throw ShapeError("prototype dimension " + std::to_string(prototype.size()) +
                     " differs from feature depth " +
                     std::to_string(features.depth));
  }
  Map2d map(features.height, features.width);
  for (std::size_t c = 0; c < features.cell_count(); ++c) {
    map.values[c] = log_similarity(squared_l2(features.cell(c), prototype), epsilon);
  }
  return map;
}

double max_pool_score(const Map2d& map) {
  if (map.empty()) throw ShapeError("max pooling over an empty map");
  return *std::max_element(map.values.begin(), map.values.end());
}

double focal_similarity(const Map2d& map) {
  if (map.empty()) throw ShapeError("focal similarity over an empty map");
  double sum = 0.0;
  for (double v : map.values) sum += v;
  return max_pool_score(map) - sum / static_cast<double>(map.size());
}

double slot_aggregate(std::span<const double> q, std::span<const double> g) {
  if (q.size() != g.size()) {
    throw ShapeError("slot distribution and score vector lengths differ");
  }
  double sum = 0.0;
  for (double v : q) sum += v;
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw ValidationError("slot distribution sums to " + std::to_string(sum));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * g[i];
  return acc;
}

std::vector<Map2d> pipnet_prototype_maps(const FeatureMap& features) {
  std::vector<Map2d> maps(features.depth, Map2d(features.height, features.width));
  std::vector<double> ex(features.depth);
  for (std::size_t c = 0; c < features.cell_count(); ++c) {
    const auto cell = features.cell(c);
    const double peak = *std::max_element(cell.begin(), cell.end());
    double denom = 0.0;
    for (std::size_t d = 0; d < features.depth; ++d) {
      ex[d] = std::exp(cell[d] - peak);
      denom += ex[d];
    }
    for (std::size_t d = 0; d < features.depth; ++d) {
      maps[d].values[c] = ex[d] / denom;
    }
  }
  return maps;
}

double pipnet_output(double score, double weight) {
  if (weight < 0.0) {
    throw ValidationError("PIPNet weights must be nonnegative");
  }
  const double x = score * weight;
  return std::log1p(x * x);
}

std::vector<double> classify(std::span<const double> scores,
                             const Grid<double>& weights, ModelKind kind) {
  if (weights.cols != scores.size()) {
    throw ShapeError("classifier has " + std::to_string(weights.cols) +
                     " columns but " + std::to_string(scores.size()) +
                     " scores were given");
  }
  std::vector<double> logits(weights.rows, 0.0);
  for (std::size_t k = 0; k < weights.rows; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.cols; ++j) {
      acc += kind == ModelKind::kIndirect
                 ? pipnet_output(scores[j], weights.at(k, j))
                 : weights.at(k, j) * scores[j];
    }
    logits[k] = acc;
  }
  return logits;
}

std::vector<std::vector<double>> project_prototypes(
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::vector<double>>>& candidates) {
  if (candidates.size() != prototypes.size()) {
    throw ShapeError("one candidate set per prototype is required");
  }
  std::vector<std::vector<double>> out;
  out.reserve(prototypes.size());
  for (std::size_t m = 0; m < prototypes.size(); ++m) {
    const auto& set = candidates[m];
    if (set.empty()) {
      throw ValidationError("prototype " + std::to_string(m) +
                            " has no projection candidates");
    }
    std::size_t best = 0;
    double best_d = squared_l2(prototypes[m], set[0]);
    for (std::size_t i = 1; i < set.size(); ++i) {
      const double d = squared_l2(prototypes[m], set[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    out.push_back(set[best]);
  }
  return out;
}

ForwardArtifacts forward_from_features(const ModelBundle& model,
                                       const FeatureMap& features) {
  ForwardArtifacts fa;
  fa.feature_map = features;
  if (model.kind == ModelKind::kIndirect) {
    fa.similarity_maps = pipnet_prototype_maps(features);
  } else {
    check_prototype_dims(features, model.prototypes);
    fa.similarity_maps.reserve(model.prototypes.size());
    for (const auto& p : model.prototypes) {
      fa.similarity_maps.push_back(
          similarity_map(features, p, model.similarity_epsilon));
    }
  }
  fa.similarity_scores.reserve(fa.similarity_maps.size());
  for (const auto& m : fa.similarity_maps) {
    fa.similarity_scores.push_back(max_pool_score(m));
  }

  if (model.kind == ModelKind::kExplicitShared) {
    std::vector<double> focal;
    focal.reserve(fa.similarity_maps.size());
    for (const auto& m : fa.similarity_maps) focal.push_back(focal_similarity(m));
    const std::size_t k = model.slot_assignment.size();
    const std::size_t l = model.slots_per_class();
    std::vector<double> slots(k * l);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t s = 0; s < l; ++s) {
        slots[c * l + s] = slot_aggregate(model.slot_assignment[c][s], focal);
      }
    }
    const auto& w = model.classifier_weights;
    if (w.cols == l * k) {
      fa.output = classify(slots, w, model.kind);
    } else if (w.cols == l) {
      // Per-class weights over the class's own L slots.
      fa.output.assign(k, 0.0);
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t s = 0; s < l; ++s) {
          fa.output[c] += w.at(c, s) * slots[c * l + s];
        }
      }
    } else {
      throw ShapeError("shared-model classifier must have L or K*L columns");
    }
  } else {
    fa.output = classify(fa.similarity_scores, model.classifier_weights, model.kind);
  }
  return fa;
}

double regeneration_error(const ModelBundle& model, const SampleBundle& sample) {
  if (!sample.forward.feature_map) return -1.0;
  const auto regen = forward_from_features(model, *sample.forward.feature_map);
  const auto& stored = sample.forward.similarity_scores;
  if (regen.similarity_scores.size() != stored.size()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < stored.size(); ++i) {
    worst = std::max(worst, std::abs(regen.similarity_scores[i] - stored[i]));
  }
  return worst;
}

LossValue cluster_loss_multilabel(
    std::span<const LossSample> samples,
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::size_t>>& class_prototypes) {
  const double v = mean_over_assignments(samples, [&](const LossSample& s, int k) {
    check_prototype_dims(s.features, prototypes);
    if (k < 0 || static_cast<std::size_t>(k) >= class_prototypes.size() ||
        class_prototypes[k].empty()) {
      throw ValidationError("class " + std::to_string(k) + " has no prototypes");
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : class_prototypes[k]) {
      best = std::min(best, min_cell_distance(s.features, prototypes.at(j)));
    }
    return best;
  });
  return {v, LossKind::kCluster};
}

LossValue separation_loss_multilabel(
    std::span<const LossSample> samples,
    const std::vector<std::vector<double>>& prototypes,
    const std::vector<std::vector<std::size_t>>& class_prototypes) {
  const double v = mean_over_assignments(samples, [&](const LossSample& s, int k) {
    check_prototype_dims(s.features, prototypes);
    if (k < 0 || static_cast<std::size_t>(k) >= class_prototypes.size()) {
      throw ValidationError("label " + std::to_string(k) + " out of range");
    }
    const auto& own = class_prototypes[k];
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < prototypes.size(); ++j) {
      if (std::find(own.begin(), own.end(), j) != own.end()) continue;
      any = true;
      best = std::min(best, min_cell_distance(s.features, prototypes[j]));
    }
    if (!any) {
      throw ValidationError("every prototype belongs to class " +
                            std::to_string(k) + "; separation is undefined");
    }
    return best;
  });
  // Written as 0 - v so a zero distance yields +0 rather than -0.
  return {0.0 - v, LossKind::kSeparation};
}

LossValue margin_loss_multilabel(std::span<const double> output,
                                 std::span<const int> label_set,
                                 std::size_t class_count) {
  if (output.size() != class_count) {
    throw ShapeError("output length differs from class count");
  }
  std::vector<bool> positive(class_count, false);
  for (int y : label_set) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ValidationError("label " + std::to_string(y) + " out of range");
    }
    positive[y] = true;
  }
  const auto npos = std::count(positive.begin(), positive.end(), true);
  if (npos == 0 || static_cast<std::size_t>(npos) == class_count) {
    throw ValidationError("margin loss needs a nonempty proper label subset");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < class_count; ++j) {
    if (!positive[j]) continue;
    for (std::size_t i = 0; i < class_count; ++i) {
      if (positive[i]) continue;
      acc += std::max(0.0, 1.0 - (output[j] - output[i]));
    }
  }
  return {acc / static_cast<double>(class_count), LossKind::kMargin};
}

LossValue orthogonal_loss(const std::vector<std::vector<double>>& slots) {
  if (slots.size() < 2) throw ValidationError("orthogonal loss needs >= 2 slots");
  std::vector<double> norms;
  norms.reserve(slots.size());
  for (const auto& q : slots) {
    if (q.size() != slots.front().size()) throw ShapeError("slot length mismatch");
    double n2 = 0.0;
    for (double v : q) n2 += v * v;
    if (n2 == 0.0) throw ValidationError("zero-norm slot distribution");
    norms.push_back(std::sqrt(n2));
  }
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < slots.size(); ++a) {
    for (std::size_t b = a + 1; b < slots.size(); ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < slots[a].size(); ++i) dot += slots[a][i] * slots[b][i];
      acc += dot / (norms[a] * norms[b]);
      ++pairs;
    }
  }
  return {acc / static_cast<double>(pairs), LossKind::kOrthogonal};
}

std::vector<std::vector<std::size_t>> prototypes_by_class(
    std::span<const int> class_of_prototype, std::size_t class_count) {
  std::vector<std::vector<std::size_t>> out(class_count);
  for (std::size_t j = 0; j < class_of_prototype.size(); ++j) {
    const int c = class_of_prototype[j];
    if (c < 0 || static_cast<std::size_t>(c) >= class_count) {
      throw ValidationError("prototype class out of range");
    }
    out[c].push_back(j);
  }
  return out;
}

}  // namespace protoeval
