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

#include "protoeval/metrics_space.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "protoeval/errors.h"
#include "protoeval/metrics_change.h"
#include "protoeval/perturb.h"

namespace protoeval {
namespace {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

template <typename PairFn>
double mean_over_pairs(const std::vector<Map2d>& maps, PairFn fn) {
  if (maps.size() < 2) {
    throw ValidationError("pairwise contrast needs at least two maps");
  }
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < maps.size(); ++a) {
    for (std::size_t b = a + 1; b < maps.size(); ++b) {
      acc += fn(maps[a], maps[b]);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

}  // namespace

ClassVectorSets tag_sets(const std::vector<std::vector<std::vector<double>>>& sets) {
  ClassVectorSets out(sets.size());
  std::size_t next = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const auto& v : sets[k]) out[k].push_back({next++, v});
  }
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine distance: length mismatch");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw ValidationError("cosine distance of a zero-norm vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return 1.0 - dot / (na * nb);
}

SetDistance mean_cosine_distance_inter(const ClassVectorSets& sets) {
  // Union of all members, first occurrence of each id.
  std::vector<const TaggedVector*> all;
  std::set<std::size_t> seen;
  for (const auto& cls : sets) {
    for (const auto& v : cls) {
      if (seen.insert(v.id).second) all.push_back(&v);
    }
  }

  SetDistance out;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& cls = sets[k];
    std::set<std::size_t> own;
    for (const auto& v : cls) own.insert(v.id);
    std::vector<const TaggedVector*> others;
    for (const auto* v : all) {
      if (!own.count(v->id)) others.push_back(v);
    }
    if (cls.empty() || others.empty()) {
      out.skipped_classes.push_back(k);
      continue;
    }
    double class_acc = 0.0;
    for (const auto& p : cls) {
      double member_acc = 0.0;
      for (const auto* q : others) member_acc += cosine_distance(p.values, q->values);
      class_acc += member_acc / static_cast<double>(others.size());
    }
    total += class_acc / static_cast<double>(cls.size());
    ++used;
  }
  const std::size_t populated = static_cast<std::size_t>(std::count_if(
      sets.begin(), sets.end(), [](const auto& c) { return !c.empty(); }));
  if (populated < 2 || used == 0) {
    throw ValidationError("inter-class distance needs two populated classes");
  }
  out.value = total / static_cast<double>(used);
  return out;
}

SetDistance mean_cosine_distance_intra(const ClassVectorSets& sets) {
  SetDistance out;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& cls = sets[k];
    bool skip = cls.size() < 2;
    double class_acc = 0.0;
    for (std::size_t i = 0; i < cls.size() && !skip; ++i) {
      double member_acc = 0.0;
      std::size_t count = 0;
      for (std::size_t j = 0; j < cls.size(); ++j) {
        if (cls[j].id == cls[i].id) continue;
        member_acc += cosine_distance(cls[i].values, cls[j].values);
        ++count;
      }
      if (count == 0) {
        skip = true;
        break;
      }
      class_acc += member_acc / static_cast<double>(count);
    }
    if (skip) {
      out.skipped_classes.push_back(k);
      continue;
    }
    total += class_acc / static_cast<double>(cls.size());
    ++used;
  }
  if (used == 0) {
    throw ValidationError("intra-class distance needs a class with two members");
  }
  out.value = total / static_cast<double>(used);
  return out;
}

double activation_entropy(std::span<const double> scores, std::size_t bins) {
  if (scores.empty()) throw DegenerateSeriesError("empty score series");
  if (bins == 0) throw ValidationError("entropy needs at least one bin");
  const double peak = *std::max_element(scores.begin(), scores.end());
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw DegenerateSeriesError("score series has no positive maximum");
  }
  std::vector<std::size_t> counts(bins, 0);
  for (double s : scores) {
    if (s < 0.0 || !std::isfinite(s)) {
      throw ValidationError("similarity scores must be finite and nonnegative");
    }
    const double v = s / peak;
    auto bin = static_cast<std::size_t>(std::floor(v * static_cast<double>(bins)));
    counts[std::min(bin, bins - 1)]++;
  }
  double h = 0.0;
  const double n = static_cast<double>(scores.size());
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double pairwise_plc_contra(const std::vector<Map2d>& maps) {
  return mean_over_pairs(maps, [](const Map2d& a, const Map2d& b) { return plc(a, b); });
}

double pairwise_palc_contra(const std::vector<Map2d>& maps) {
  return mean_over_pairs(maps, [](const Map2d& a, const Map2d& b) { return palc(a, b); });
}

TopPrototypes top_prototypes(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  TopPrototypes out;
  const std::size_t take = std::min(k, order.size());
  out.ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  out.shortfall = k - take;
  return out;
}

}  // namespace protoeval
