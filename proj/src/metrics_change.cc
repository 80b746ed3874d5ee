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

#include "protoeval/metrics_change.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "protoeval/errors.h"
#include "protoeval/perturb.h"

namespace protoeval {
namespace {

void require_same_shape(const Map2d& a, const Map2d& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(what) + ": maps differ in extent");
  }
  if (a.empty()) throw ShapeError(std::string(what) + ": empty maps");
}

// 1 - sum(min(a_j, b_j)) / sum(max(a_j, b_j)).
double min_max_ratio_change(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += std::min(a[j], b[j]);
    den += std::max(a[j], b[j]);
  }
  return 1.0 - num / den;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

double vlc(const BoundingBox& a, const BoundingBox& b) {
  const std::size_t r0 = std::max(a.row0, b.row0), r1 = std::min(a.row1, b.row1);
  const std::size_t c0 = std::max(a.col0, b.col0), c1 = std::min(a.col1, b.col1);
  const std::size_t inter = (r0 < r1 && c0 < c1) ? (r1 - r0) * (c1 - c0) : 0;
  const std::size_t uni = a.area() + b.area() - inter;
  if (uni == 0) throw ShapeError("vlc on empty boxes");
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double psc(double score, double perturbed_score) {
  if (!(score > 0.0)) {
    throw ValidationError("psc needs a positive original similarity score");
  }
  return std::abs(score - perturbed_score) / score;
}

double vac(const Map2d& a, const Map2d& b) {
  if (a.size() != b.size()) throw ShapeError("vac: pixel counts differ");
  if (all_zero(a.values) && all_zero(b.values)) {
    throw DegenerateSaliencyError("vac: both saliency maps are all zero");
  }
  std::vector<double> sa = a.values, sb = b.values;
  std::sort(sa.begin(), sa.end(), std::greater<>());
  std::sort(sb.begin(), sb.end(), std::greater<>());
  return min_max_ratio_change(sa, sb);
}

Cell argmax_cell(const Map2d& map) {
  if (map.empty()) throw ShapeError("argmax of an empty map");
  const auto it = std::max_element(map.values.begin(), map.values.end());
  const auto idx = static_cast<std::size_t>(it - map.values.begin());
  return {idx / map.cols, idx % map.cols};
}

double plc(const Map2d& a, const Map2d& b) {
  require_same_shape(a, b, "plc");
  const Cell ca = argmax_cell(a), cb = argmax_cell(b);
  const auto diff = [](std::size_t x, std::size_t y) {
    return x > y ? x - y : y - x;
  };
  return static_cast<double>(diff(ca.row, cb.row) + diff(ca.col, cb.col));
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("mask extents differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a.values[i] && b.values[i]) ? 1 : 0;
    uni += (a.values[i] || b.values[i]) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double palc(const Map2d& a, const Map2d& b) {
  require_same_shape(a, b, "palc");
  return 1.0 - mask_iou(binarize_similarity(a), binarize_similarity(b));
}

double pac(const Map2d& a, const Map2d& b) {
  require_same_shape(a, b, "pac");
  for (double v : a.values) {
    if (v < 0.0) throw ValidationError("pac needs nonnegative similarity maps");
  }
  for (double v : b.values) {
    if (v < 0.0) throw ValidationError("pac needs nonnegative similarity maps");
  }
  if (all_zero(a.values) && all_zero(b.values)) {
    throw DegenerateSaliencyError("pac: both similarity maps are all zero");
  }
  return min_max_ratio_change(a.values, b.values);
}

int prc(int rank_a, int rank_b) { return std::abs(rank_b - rank_a); }

double cac(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("cac: output lengths differ");
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] < 0.0 || b[j] < 0.0) {
      throw ValidationError("cac needs nonnegative logits");
    }
  }
  if (all_zero(a) && all_zero(b)) {
    throw DegenerateOutputError("cac: both outputs are all zero");
  }
  return min_max_ratio_change(a, b);
}

int descending_rank(std::span<const double> values, std::size_t index) {
  const double v = values[index];
  int rank = 1;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] > v || (values[j] == v && j < index)) ++rank;
  }
  return rank;
}

int crc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("crc: output lengths differ");
  const auto predicted =
      static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  return std::abs(descending_rank(b, predicted) - descending_rank(a, predicted));
}

}  // namespace protoeval
