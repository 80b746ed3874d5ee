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

#include "protoeval/splits.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "protoeval/errors.h"
#include "protoeval/perturb.h"

namespace protoeval {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

std::map<int, std::vector<std::size_t>> group_by_class(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

struct Clustering {
  std::vector<int> assignment;
  double inertia = std::numeric_limits<double>::infinity();
};

Clustering lloyd(const std::vector<std::vector<double>>& points, std::size_t first,
                 std::size_t second, std::size_t max_iterations) {
  std::vector<std::vector<double>> centers = {points[first], points[second]};
  Clustering c;
  c.assignment.assign(points.size(), -1);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int a = squared_distance(points[i], centers[1]) <
                            squared_distance(points[i], centers[0])
                        ? 1
                        : 0;
      changed |= a != c.assignment[i];
      c.assignment[i] = a;
    }
    if (!changed) break;
    for (int k = 0; k < 2; ++k) {
      std::vector<double> sum(points.front().size(), 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (c.assignment[i] != k) continue;
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += points[i][d];
        ++n;
      }
      if (n == 0) continue;
      for (double& s : sum) s /= static_cast<double>(n);
      centers[k] = std::move(sum);
    }
  }
  c.inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    c.inertia += squared_distance(points[i], centers[c.assignment[i]]);
  }
  return c;
}

}  // namespace

StratifiedSplit stratified_splits(std::span<const int> labels, std::uint64_t seed,
                                  double test_fraction, std::size_t fold_count) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  if (fold_count < 2) throw ValidationError("need at least two folds");
  const auto groups = group_by_class(labels);
  if (groups.size() < 2) {
    throw ValidationError("stratification needs at least two classes");
  }
  for (const auto& [label, members] : groups) {
    if (members.size() < kMinSamplesPerClass) {
      throw ValidationError("class " + std::to_string(label) + " has " +
                            std::to_string(members.size()) + " samples, need " +
                            std::to_string(kMinSamplesPerClass));
    }
  }

  StratifiedSplit split;
  split.folds.resize(fold_count);
  std::size_t class_index = 0;
  for (const auto& [label, members] : groups) {
    std::vector<std::size_t> order = members;
    Rng rng(derive_seed(seed, "stratified", static_cast<std::uint64_t>(label)));
    shuffle(order, rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(order.size())));
    split.test.insert(split.test.end(), order.begin(),
                      order.begin() + static_cast<std::ptrdiff_t>(n_test));

    const std::size_t rest = order.size() - n_test;
    const std::size_t base = rest / fold_count, extra = rest % fold_count;
    std::vector<std::vector<std::size_t>> chunks(fold_count);
    std::size_t pos = n_test;
    for (std::size_t f = 0; f < fold_count; ++f) {
      const bool bigger = (f + fold_count - class_index % fold_count) % fold_count < extra;
      const std::size_t take = base + (bigger ? 1 : 0);
      chunks[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
    for (std::size_t f = 0; f < fold_count; ++f) {
      for (std::size_t g = 0; g < fold_count; ++g) {
        auto& dst = g == f ? split.folds[f].val : split.folds[f].train;
        dst.insert(dst.end(), chunks[g].begin(), chunks[g].end());
      }
    }
    ++class_index;
  }
  std::sort(split.test.begin(), split.test.end());
  for (auto& f : split.folds) {
    std::sort(f.train.begin(), f.train.end());
    std::sort(f.val.begin(), f.val.end());
  }
  return split;
}

std::vector<double> border_histogram(const Image& image, const HsvSplitConfig& config) {
  if (image.height == 0 || image.width == 0) throw ShapeError("empty image");
  if (config.hue_bins == 0 || config.saturation_bins == 0) {
    throw ValidationError("histogram needs at least one bin per axis");
  }
  const double f = config.border_fraction;
  const double h = static_cast<double>(image.height), w = static_cast<double>(image.width);
  std::vector<double> hist(config.hue_bins * config.saturation_bins, 0.0);
  std::size_t count = 0;
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      const double rr = static_cast<double>(r), cc = static_cast<double>(c);
      const bool border = rr < f * h || rr >= (1.0 - f) * h || cc < f * w || cc >= (1.0 - f) * w;
      if (!border) continue;
      const Hsv hsv = rgb_to_hsv(image.at(r, c, 0), image.at(r, c, 1), image.at(r, c, 2));
      const auto hb = std::min(config.hue_bins - 1,
                               static_cast<std::size_t>(hsv.h * static_cast<double>(config.hue_bins)));
      const auto sb = std::min(config.saturation_bins - 1,
                               static_cast<std::size_t>(hsv.s * static_cast<double>(config.saturation_bins)));
      hist[hb * config.saturation_bins + sb] += 1.0;
      ++count;
    }
  }
  if (count == 0) throw ShapeError("border frame is empty");
  for (double& v : hist) v /= static_cast<double>(count);
  return hist;
}

HsvSplit hsv_context_split(const std::vector<Image>& images, std::span<const int> labels,
                           std::uint64_t seed, const HsvSplitConfig& config) {
  if (images.size() != labels.size()) throw ShapeError("images and labels are not aligned");
  if (config.restarts == 0) throw ValidationError("k-means needs at least one restart");
  const auto groups = group_by_class(labels);
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) {
      throw ValidationError("class " + std::to_string(label) + " has fewer than two images");
    }
  }

  HsvSplit split;
  for (const auto& [label, members] : groups) {
    std::vector<std::vector<double>> hists;
    hists.reserve(members.size());
    for (std::size_t i : members) hists.push_back(border_histogram(images[i], config));

    Rng rng(derive_seed(seed, "hsv", static_cast<std::uint64_t>(label)));
    const bool identical = std::all_of(hists.begin(), hists.end(), [&](const auto& h) {
      return squared_distance(h, hists.front()) == 0.0;
    });
    if (identical) {
      std::vector<std::size_t> order = members;
      shuffle(order, rng);
      auto n_test = static_cast<std::size_t>(std::llround(
          config.fallback_test_fraction * static_cast<double>(order.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);
      split.test.insert(split.test.end(), order.begin(),
                        order.begin() + static_cast<std::ptrdiff_t>(n_test));
      split.trainval.insert(split.trainval.end(),
                            order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
      split.fallback_classes.push_back(label);
      continue;
    }

    Clustering best;
    for (std::size_t r = 0; r < config.restarts; ++r) {
      const auto first = static_cast<std::size_t>(rng.below(hists.size()));
      std::vector<std::size_t> distinct;
      for (std::size_t j = 0; j < hists.size(); ++j) {
        if (squared_distance(hists[j], hists[first]) > 0.0) distinct.push_back(j);
      }
      const std::size_t second = distinct[rng.below(distinct.size())];
      Clustering c = lloyd(hists, first, second, config.max_iterations);
      if (c.inertia < best.inertia) best = std::move(c);
    }

    const auto ones = static_cast<std::size_t>(
        std::count(best.assignment.begin(), best.assignment.end(), 1));
    const std::size_t zeros = members.size() - ones;
    int test_cluster;
    if (ones != zeros) {
      test_cluster = ones < zeros ? 1 : 0;
    } else {
      test_cluster = 1 - best.assignment.front();
    }
    for (std::size_t j = 0; j < members.size(); ++j) {
      auto& dst = best.assignment[j] == test_cluster ? split.test : split.trainval;
      dst.push_back(members[j]);
    }
  }
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.trainval.begin(), split.trainval.end());
  return split;
}

}  // namespace protoeval
