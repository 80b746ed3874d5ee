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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "protoeval/errors.h"
#include "protoeval/proto_kernel.h"

using namespace protoeval;

namespace {

FeatureMap features_from(const oracle::Cells& cells) {
  FeatureMap f(cells.size(), cells[0].size(), cells[0][0].size());
  for (std::size_t r = 0; r < f.height; ++r) {
    for (std::size_t c = 0; c < f.width; ++c) {
      for (std::size_t d = 0; d < f.depth; ++d) f.cell(r * f.width + c)[d] = cells[r][c][d];
    }
  }
  return f;
}

oracle::Cells random_cells(std::mt19937_64& gen, std::size_t h, std::size_t w, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  oracle::Cells z(h, std::vector<std::vector<double>>(w, std::vector<double>(d)));
  for (auto& row : z) {
    for (auto& cell : row) {
      for (auto& x : cell) x = u(gen);
    }
  }
  return z;
}

}  // namespace

TEST(LogSimilarity, ExactMatchAndUnitDistance) {
  EXPECT_NEAR(log_similarity(0.0, 1e-4), 9.21034, 1e-5);
  EXPECT_NEAR(log_similarity(1.0, 1e-4), 0.69305, 1e-5);
  EXPECT_NEAR(log_similarity(0.0, 1e-2), std::log(100.0), 1e-12);
}

TEST(LogSimilarity, DecreasesTowardZero) {
  double prev = log_similarity(0.0, 1e-4);
  for (double d2 : {1.0, 10.0, 100.0, 1e8}) {
    const double v = log_similarity(d2, 1e-4);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
  EXPECT_LT(prev, 1e-7);
}

TEST(LogSimilarity, StrictlyMonotoneOnRandomPairs) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(gen), b = u(gen);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_GT(log_similarity(a, 1e-4), log_similarity(b, 1e-4));
  }
}

TEST(SimilarityMap, MatchesOracleAndRejectsDepthMismatch) {
  std::mt19937_64 gen(5);
  const auto z = random_cells(gen, 3, 4, 2);
  const std::vector<double> p = {0.25, -0.5};
  const Map2d m = similarity_map(features_from(z), p, 1e-4);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(m.at(r, c), oracle::log_sim(oracle::sqdist(z[r][c], p), 1e-4), 1e-12);
    }
  }
  EXPECT_THROW(similarity_map(features_from(z), std::vector<double>{1, 2, 3}, 1e-4), ShapeError);
  EXPECT_THROW(similarity_map(features_from(z), p, 1.0), ValidationError);
}

TEST(MaxPool, Examples) {
  EXPECT_EQ(max_pool_score(Map2d(2, 2, std::vector<double>{1, 2, 3, 0})), 3.0);
  EXPECT_EQ(max_pool_score(Map2d(3, 3, 0.7)), 0.7);
  EXPECT_THROW(max_pool_score(Map2d()), ShapeError);
  FeatureMap f(2, 2, 1);
  f.values = {0.0, 3.0, -1.0, 2.0};
  const std::vector<double> p = {2.0};
  EXPECT_NEAR(max_pool_score(similarity_map(f, p, 1e-4)), 9.21034, 1e-5);
}

TEST(FocalSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(focal_similarity(Map2d(2, 2, std::vector<double>{0, 1, 2, 5})), 3.0);
  EXPECT_DOUBLE_EQ(focal_similarity(Map2d(2, 3, 4.5)), 0.0);
  EXPECT_DOUBLE_EQ(focal_similarity(Map2d(1, 1, 8.0)), 0.0);
  EXPECT_THROW(focal_similarity(Map2d()), ShapeError);
}

TEST(SlotAggregate, Examples) {
  EXPECT_NEAR(slot_aggregate(std::vector<double>{0.2, 0.8}, std::vector<double>{1, 2}), 1.8, 1e-12);
  EXPECT_DOUBLE_EQ(slot_aggregate(std::vector<double>{0, 1, 0}, std::vector<double>{4, 5, 6}), 5.0);
  EXPECT_NEAR(slot_aggregate(std::vector<double>(4, 0.25), std::vector<double>(4, 2.5)), 2.5, 1e-12);
  EXPECT_THROW(slot_aggregate(std::vector<double>{1.0}, std::vector<double>{1, 2}), ShapeError);
  EXPECT_THROW(slot_aggregate(std::vector<double>{0.2, 0.6}, std::vector<double>{1, 2}),
               ValidationError);
}

TEST(PipnetMaps, SoftmaxExamples) {
  FeatureMap f(1, 2, 2);
  f.values = {0.0, 0.0, std::log(3.0), 0.0};
  const auto maps = pipnet_prototype_maps(f);
  ASSERT_EQ(maps.size(), 2u);
  EXPECT_NEAR(maps[0].at(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(maps[1].at(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(maps[0].at(0, 1), 0.75, 1e-12);
  EXPECT_NEAR(maps[1].at(0, 1), 0.25, 1e-12);
}

TEST(PipnetMaps, SumsToOneAndShiftInvariant) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMap f(3, 3, 5);
    for (auto& v : f.values) v = u(gen);
    FeatureMap shifted = f;
    for (std::size_t i = 0; i < f.cell_count(); ++i) {
      const double c = u(gen);
      for (auto& v : shifted.cell(i)) v += c;
    }
    const auto a = pipnet_prototype_maps(f);
    const auto b = pipnet_prototype_maps(shifted);
    for (std::size_t cell = 0; cell < 9; ++cell) {
      double sum = 0.0;
      for (std::size_t m = 0; m < 5; ++m) {
        EXPECT_GT(a[m].values[cell], 0.0);
        EXPECT_NEAR(a[m].values[cell], b[m].values[cell], 1e-9);
        sum += a[m].values[cell];
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(PipnetOutput, Examples) {
  EXPECT_EQ(pipnet_output(0.0, 7.0), 0.0);
  EXPECT_NEAR(pipnet_output(1.0, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(pipnet_output(3.0, 2.0), std::log(37.0), 1e-12);
  EXPECT_NEAR(pipnet_output(3.0, 2.0), 3.61092, 1e-5);
  EXPECT_THROW(pipnet_output(1.0, -0.5), ValidationError);
}

TEST(Classify, Examples) {
  const std::vector<double> s = {1, 2};
  EXPECT_EQ(classify(s, Grid<double>(2, 2, std::vector<double>{1, 0, 0, 1}),
                     ModelKind::kExplicitClassSpecific),
            (std::vector<double>{1, 2}));
  EXPECT_EQ(classify(s, Grid<double>(3, 2, 0.0), ModelKind::kExplicitClassSpecific),
            (std::vector<double>(3, 0.0)));
  EXPECT_EQ(classify(std::vector<double>{2, 2}, Grid<double>(1, 2, std::vector<double>{1, 0.5}),
                     ModelKind::kExplicitClassSpecific),
            (std::vector<double>{3}));
  const auto pip =
      classify(std::vector<double>{1, 3}, Grid<double>(1, 2, std::vector<double>{1, 2}),
               ModelKind::kIndirect);
  EXPECT_NEAR(pip[0], std::log(2.0) + std::log(37.0), 1e-12);
  EXPECT_THROW(classify(s, Grid<double>(1, 3, 1.0), ModelKind::kExplicitClassSpecific),
               ShapeError);
}

TEST(Projection, Examples) {
  const std::vector<std::vector<double>> protos = {{1, 1}, {0, 0}, {2, 0}};
  const std::vector<std::vector<std::vector<double>>> cands = {
      {{0, 0}, {3, 4}}, {{5, 5}, {0, 0}}, {{1, 0}, {3, 0}}};
  const auto out = project_prototypes(protos, cands);
  EXPECT_EQ(out[0], (std::vector<double>{0, 0}));
  EXPECT_EQ(out[1], (std::vector<double>{0, 0}));
  EXPECT_EQ(out[2], (std::vector<double>{1, 0}));  // tie, first in storage order
  EXPECT_EQ(project_prototypes(out, cands), out);
  EXPECT_THROW(project_prototypes({{1, 1}}, {{}}), ValidationError);
}

TEST(Projection, NeverIncreasesMinDistance) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> protos(3, std::vector<double>(2));
    std::vector<std::vector<std::vector<double>>> cands(3);
    for (auto& p : protos) {
      for (auto& x : p) x = u(gen);
    }
    for (auto& set : cands) {
      set.assign(4, std::vector<double>(2));
      for (auto& v : set) {
        for (auto& x : v) x = u(gen);
      }
    }
    const auto out = project_prototypes(protos, cands);
    for (std::size_t m = 0; m < 3; ++m) {
      double before = 1e300, after = 1e300;
      for (const auto& c : cands[m]) {
        before = std::min(before, oracle::sqdist(protos[m], c));
        after = std::min(after, oracle::sqdist(out[m], c));
      }
      EXPECT_LE(after, before);
      EXPECT_EQ(after, 0.0);
    }
  }
}

// --- Losses --------------------------------------------------------------------

TEST(ClusterLoss, Examples) {
  LossSample s;
  s.features = FeatureMap(1, 2, 1);
  s.features.values = {0.0, 2.0};
  s.labels = {0};
  const std::vector<LossSample> one = {s};
  EXPECT_DOUBLE_EQ(cluster_loss_multilabel(one, {{1.0}}, {{0}}).value, 1.0);
  EXPECT_DOUBLE_EQ(cluster_loss_multilabel(one, {{2.0}}, {{0}}).value, 0.0);

  LossSample two = s;
  two.labels = {0, 1};
  // class 0 minimum 1 (prototype 1), class 1 minimum 3 (prototype 2 - sqrt 3).
  const std::vector<std::vector<double>> protos = {{1.0}, {2.0 + std::sqrt(3.0)}};
  const std::vector<LossSample> both = {two};
  EXPECT_NEAR(cluster_loss_multilabel(both, protos, {{0}, {1}}).value, 2.0, 1e-12);
  EXPECT_THROW(cluster_loss_multilabel(both, protos, {{0}, {}}), ValidationError);
}

TEST(SeparationLoss, Examples) {
  LossSample s;
  s.features = FeatureMap(1, 2, 1);
  s.features.values = {0.0, 2.0};
  s.labels = {0};
  const std::vector<LossSample> one = {s};
  EXPECT_DOUBLE_EQ(separation_loss_multilabel(one, {{0.0}, {5.0}}, {{0}, {1}}).value, -9.0);
  EXPECT_DOUBLE_EQ(separation_loss_multilabel(one, {{0.0}, {2.0}}, {{0}, {1}}).value, 0.0);
  LossSample scaled = s;
  scaled.features.values = {0.0, 4.0};
  const std::vector<LossSample> sc = {scaled};
  EXPECT_DOUBLE_EQ(separation_loss_multilabel(sc, {{0.0}, {10.0}}, {{0}, {1}}).value, -36.0);
  EXPECT_THROW(separation_loss_multilabel(one, {{0.0}}, {{0}}), ValidationError);
}

TEST(MarginLoss, Examples) {
  const std::vector<int> y0 = {0};
  EXPECT_DOUBLE_EQ(margin_loss_multilabel(std::vector<double>{2, 0}, y0, 2).value, 0.0);
  EXPECT_DOUBLE_EQ(margin_loss_multilabel(std::vector<double>{0.5, 0}, y0, 2).value, 0.25);
  EXPECT_DOUBLE_EQ(margin_loss_multilabel(std::vector<double>{0, 0}, y0, 2).value, 0.5);
  EXPECT_THROW(margin_loss_multilabel(std::vector<double>{0, 0}, std::vector<int>{}, 2),
               ValidationError);
  EXPECT_THROW(margin_loss_multilabel(std::vector<double>{0, 0}, std::vector<int>{0, 1}, 2),
               ValidationError);
}

TEST(OrthogonalLoss, Examples) {
  EXPECT_DOUBLE_EQ(orthogonal_loss({{1, 0}, {0, 1}}).value, 0.0);
  EXPECT_NEAR(orthogonal_loss({{0.3, 0.7}, {0.3, 0.7}}).value, 1.0, 1e-12);
  const double h = std::sqrt(2.0) / 2.0;
  EXPECT_NEAR(orthogonal_loss({{1, 0}, {h, h}}).value, 0.70711, 1e-5);
  EXPECT_THROW(orthogonal_loss({{1, 0}}), ValidationError);
  EXPECT_THROW(orthogonal_loss({{1, 0}, {0, 0}}), ValidationError);
}

TEST(Losses, MatchNestedLoopOracles) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> n_dist(2, 6), k_dist(2, 3), side(1, 3), depth(1, 3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = k_dist(gen);
    const int n = std::max(n_dist(gen), k);
    const int d = depth(gen);
    std::vector<std::vector<double>> protos(n, std::vector<double>(d));
    for (auto& p : protos) {
      for (auto& x : p) x = u(gen);
    }
    std::vector<int> owner(n);
    for (int j = 0; j < n; ++j) owner[j] = j < k ? j : static_cast<int>(gen() % k);

    std::vector<LossSample> samples;
    std::vector<oracle::LossCase> cases;
    const int sample_count = 1 + static_cast<int>(gen() % 4);
    for (int i = 0; i < sample_count; ++i) {
      oracle::LossCase c;
      c.z = random_cells(gen, side(gen), side(gen), d);
      // Nonempty proper subset of classes.
      while (c.labels.empty() || static_cast<int>(c.labels.size()) == k) {
        c.labels.clear();
        for (int j = 0; j < k; ++j) {
          if (gen() % 2) c.labels.insert(j);
        }
      }
      LossSample s;
      s.features = features_from(c.z);
      s.labels.assign(c.labels.begin(), c.labels.end());
      samples.push_back(std::move(s));
      cases.push_back(std::move(c));
    }
    const auto by_class = prototypes_by_class(owner, k);
    const double cl = cluster_loss_multilabel(samples, protos, by_class).value;
    const double sep = separation_loss_multilabel(samples, protos, by_class).value;
    EXPECT_NEAR(cl, oracle::cluster(cases, protos, owner), 1e-9);
    EXPECT_NEAR(sep, oracle::separation(cases, protos, owner), 1e-9);
    EXPECT_GE(cl, 0.0);
    EXPECT_LE(sep, 0.0);

    std::vector<double> o(k);
    for (auto& x : o) x = u(gen);
    const std::vector<int> ys(cases[0].labels.begin(), cases[0].labels.end());
    EXPECT_NEAR(margin_loss_multilabel(o, ys, k).value, oracle::margin(o, cases[0].labels, k),
                1e-9);

    std::vector<std::vector<double>> slots(2 + gen() % 3, std::vector<double>(n));
    for (auto& q : slots) {
      for (auto& x : q) x = std::fabs(u(gen)) + 1e-3;
    }
    const double orth = orthogonal_loss(slots).value;
    EXPECT_NEAR(orth, oracle::mean_pair_cosine(slots), 1e-9);
    EXPECT_GE(orth, -1.0);
    EXPECT_LE(orth, 1.0);
  }
}

// --- Forward pass --------------------------------------------------------------

TEST(Forward, ExplicitRegeneratesScores) {
  ModelBundle m;
  m.kind = ModelKind::kExplicitClassSpecific;
  m.prototypes = {{0, 0}, {1, 1}};
  m.classifier_weights = Grid<double>(2, 2, std::vector<double>{1, 0, 0, 1});
  m.class_of_prototype = {0, 1};
  FeatureMap f(1, 2, 2);
  f.values = {0, 0, 3, 3};
  const auto a = forward_from_features(m, f);
  ASSERT_EQ(a.similarity_scores.size(), 2u);
  EXPECT_NEAR(a.similarity_scores[0], std::log(1.0 / 1e-4), 1e-9);
  EXPECT_NEAR(a.similarity_scores[1], oracle::log_sim(2.0, 1e-4), 1e-9);
  EXPECT_EQ(a.output, a.similarity_scores);

  SampleBundle s;
  s.forward = a;
  s.forward.feature_map = f;
  EXPECT_LE(regeneration_error(m, s), 1e-12);
  s.forward.similarity_scores[1] += 0.1;
  EXPECT_NEAR(regeneration_error(m, s), 0.1, 1e-9);
  s.forward.feature_map.reset();
  EXPECT_LT(regeneration_error(m, s), 0.0);
}

TEST(Forward, SharedUsesFocalSimilarityPerSlot) {
  ModelBundle m;
  m.kind = ModelKind::kExplicitShared;
  m.prototypes = {{0.0}, {2.0}};
  m.slot_assignment = {{{0.25, 0.75}}, {{1.0, 0.0}}};
  m.classifier_weights = Grid<double>(2, 1, std::vector<double>{1.0, 2.0});
  FeatureMap f(1, 2, 1);
  f.values = {0.0, 1.0};
  const auto a = forward_from_features(m, f);
  const double g0 = oracle::log_sim(0, 1e-4) - (oracle::log_sim(0, 1e-4) + oracle::log_sim(1, 1e-4)) / 2;
  const double g1 = oracle::log_sim(1, 1e-4) - (oracle::log_sim(4, 1e-4) + oracle::log_sim(1, 1e-4)) / 2;
  ASSERT_EQ(a.output.size(), 2u);
  EXPECT_NEAR(a.output[0], 0.25 * g0 + 0.75 * g1, 1e-9);
  EXPECT_NEAR(a.output[1], 2.0 * g0, 1e-9);
}

TEST(Forward, IndirectNonnegativeOutputs) {
  ModelBundle m;
  m.kind = ModelKind::kIndirect;
  m.classifier_weights = Grid<double>(2, 3, std::vector<double>{1, 0, 0, 0, 2, 3});
  FeatureMap f(2, 2, 3);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<double>(i % 5);
  const auto a = forward_from_features(m, f);
  ASSERT_EQ(a.similarity_maps.size(), 3u);
  for (double s : a.similarity_scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  for (double o : a.output) EXPECT_GE(o, 0.0);
  EXPECT_NEAR(a.output[0], std::log1p(a.similarity_scores[0] * a.similarity_scores[0]), 1e-12);
}
