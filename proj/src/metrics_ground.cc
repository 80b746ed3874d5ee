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

#include "protoeval/metrics_ground.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "protoeval/errors.h"
#include "protoeval/metrics_change.h"

namespace protoeval {
namespace {

void require_same_shape(const Mask& a, const Mask& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError("mask extents differ");
  }
}

std::size_t count_ones(const Mask& m) {
  return static_cast<std::size_t>(
      std::count_if(m.values.begin(), m.values.end(), [](auto v) { return v != 0; }));
}

std::size_t count_both(const Mask& a, const Mask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a.values[i] && b.values[i]) ? 1 : 0;
  return n;
}

std::size_t argmax_index(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

double object_overlap(const Mask& saliency_mask, const Mask& object_mask) {
  require_same_shape(saliency_mask, object_mask);
  const std::size_t object = count_ones(object_mask);
  if (object == 0) throw ValidationError("object overlap needs a nonempty object mask");
  return static_cast<double>(count_both(saliency_mask, object_mask)) /
         static_cast<double>(object);
}

double background_overlap(const Mask& saliency_mask, const Mask& object_mask) {
  require_same_shape(saliency_mask, object_mask);
  const std::size_t active = count_ones(saliency_mask);
  if (active == 0) throw EmptyMaskError("background overlap of an empty saliency mask");
  return 1.0 - static_cast<double>(count_both(saliency_mask, object_mask)) /
                   static_cast<double>(active);
}

double iord(const Map2d& saliency, const Mask& object_mask) {
  if (saliency.rows != object_mask.rows || saliency.cols != object_mask.cols) {
    throw ShapeError("saliency and object mask extents differ");
  }
  if (saliency.empty()) throw ShapeError("empty saliency map");
  const double peak = *std::max_element(saliency.values.begin(), saliency.values.end());
  if (!(peak > 0.0)) throw DegenerateSaliencyError("saliency map has no positive value");

  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_count = 0, out_count = 0;
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    const double v = saliency.values[i] / peak;
    const double m = object_mask.values[i] ? 1.0 : 0.0;
    const double inside = v * m;
    const double outside = v * (1.0 - m);
    if (inside > 0.0) {
      in_sum += inside;
      ++in_count;
    }
    if (outside > 0.0) {
      out_sum += outside;
      ++out_count;
    }
  }
  const double in_mean = in_count ? in_sum / static_cast<double>(in_count) : 0.0;
  const double out_mean = out_count ? out_sum / static_cast<double>(out_count) : 0.0;
  return in_mean - out_mean;
}

void accumulate_parts(PartHistogram& histogram, const BoundingBox& box,
                      std::span<const PartPoint> parts) {
  histogram.image_count++;
  std::set<int> counted;
  for (const auto& p : parts) {
    if (!p.visible || p.row < 0.0 || p.col < 0.0) continue;
    const auto r = static_cast<std::size_t>(std::floor(p.row));
    const auto c = static_cast<std::size_t>(std::floor(p.col));
    if (box.contains(r, c) && counted.insert(p.part_id).second) {
      histogram.counts[p.part_id]++;
    }
  }
}

double consistency(const PartHistogram& histogram, std::span<const int> vocabulary) {
  if (vocabulary.empty()) throw ValidationError("consistency needs a part vocabulary");
  if (histogram.image_count == 0) {
    throw ValidationError("consistency needs at least one image");
  }
  double acc = 0.0;
  for (int part : vocabulary) {
    const auto it = histogram.counts.find(part);
    const std::size_t c = it == histogram.counts.end() ? 0 : it->second;
    acc += static_cast<double>(c) / static_cast<double>(histogram.image_count);
  }
  return acc / static_cast<double>(vocabulary.size());
}

std::size_t global_size(const Grid<double>& weights, double epsilon) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < weights.cols; ++j) {
    for (std::size_t k = 0; k < weights.rows; ++k) {
      if (std::abs(weights.at(k, j)) > epsilon) {
        ++n;
        break;
      }
    }
  }
  return n;
}

double sparsity(const Grid<double>& weights, double epsilon) {
  if (weights.empty()) throw ValidationError("sparsity of an empty weight matrix");
  std::size_t nonzero = 0;
  for (double w : weights.values) nonzero += (w > epsilon || w < -epsilon) ? 1 : 0;
  return static_cast<double>(weights.size() - nonzero) /
         static_cast<double>(weights.size());
}

std::optional<double> npr(const Grid<double>& weights, double epsilon) {
  std::size_t pos = 0, neg = 0;
  for (double w : weights.values) {
    pos += w > epsilon ? 1 : 0;
    neg += w < -epsilon ? 1 : 0;
  }
  if (pos == 0) {
    if (neg == 0) return 0.0;
    return std::nullopt;
  }
  return static_cast<double>(neg) / static_cast<double>(pos);
}

std::size_t local_size(std::span<const double> scores, double mu) {
  if (scores.empty()) throw DegenerateSeriesError("empty score vector");
  const double peak = *std::max_element(scores.begin(), scores.end());
  if (!(peak > 0.0)) throw DegenerateSeriesError("score vector has no positive maximum");
  return static_cast<std::size_t>(std::count_if(
      scores.begin(), scores.end(), [&](double s) { return s / peak > mu; }));
}

Grid<double> presence_matrix(
    const std::vector<std::vector<std::vector<double>>>& slot_assignment) {
  if (slot_assignment.empty() || slot_assignment.front().empty()) {
    throw ShapeError("presence matrix of an empty slot assignment");
  }
  const std::size_t n = slot_assignment.front().front().size();
  Grid<double> out(slot_assignment.size(), n);
  for (std::size_t k = 0; k < slot_assignment.size(); ++k) {
    for (const auto& q : slot_assignment[k]) {
      if (q.size() != n) throw ShapeError("slot distribution length mismatch");
      for (std::size_t i = 0; i < n; ++i) out.at(k, i) += q[i];
    }
  }
  return out;
}

Performance performance(const std::vector<std::vector<double>>& outputs,
                        const std::vector<std::vector<int>>& labels,
                        bool multilabel, std::size_t k, double threshold) {
  if (outputs.empty()) throw ValidationError("performance of an empty test set");
  if (outputs.size() != labels.size()) {
    throw ShapeError("outputs and labels are not aligned");
  }
  const std::size_t classes = outputs.front().size();
  for (const auto& o : outputs) {
    if (o.size() != classes || o.empty()) throw ShapeError("ragged output vectors");
  }
  for (const auto& ys : labels) {
    if (ys.empty()) throw ValidationError("sample without labels");
    for (int y : ys) {
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw ValidationError("label out of range");
      }
    }
  }

  Performance perf;
  const double n = static_cast<double>(outputs.size());
  if (!multilabel) {
    std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
    std::vector<bool> present(classes, false);
    std::size_t correct = 0, topk = 0;
    for (std::size_t s = 0; s < outputs.size(); ++s) {
      if (labels[s].size() != 1) {
        throw ValidationError("single-label performance needs one label per sample");
      }
      const auto truth = static_cast<std::size_t>(labels[s].front());
      const std::size_t pred = argmax_index(outputs[s]);
      present[truth] = present[pred] = true;
      if (pred == truth) {
        ++correct;
        ++tp[truth];
      } else {
        ++fp[pred];
        ++fn[truth];
      }
      if (static_cast<std::size_t>(descending_rank(outputs[s], truth)) <= k) ++topk;
    }
    perf.accuracy = static_cast<double>(correct) / n;
    perf.topk_accuracy = static_cast<double>(topk) / n;
    double f1 = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (!present[c]) continue;
      const auto denom = 2 * tp[c] + fp[c] + fn[c];
      f1 += denom ? 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom) : 0.0;
      ++used;
    }
    perf.f1 = f1 / static_cast<double>(used);
  } else {
    std::size_t exact = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t s = 0; s < outputs.size(); ++s) {
      std::vector<bool> truth(classes, false);
      for (int y : labels[s]) truth[y] = true;
      bool match = true;
      for (std::size_t c = 0; c < classes; ++c) {
        const bool pred = outputs[s][c] > threshold;
        match &= pred == truth[c];
        tp += (pred && truth[c]) ? 1 : 0;
        fp += (pred && !truth[c]) ? 1 : 0;
        fn += (!pred && truth[c]) ? 1 : 0;
      }
      exact += match ? 1 : 0;
    }
    perf.accuracy = static_cast<double>(exact) / n;
    const auto denom = 2 * tp + fp + fn;
    perf.f1 = denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 1.0;
  }
  return perf;
}

}  // namespace protoeval
