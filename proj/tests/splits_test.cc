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

#include <algorithm>
#include <map>
#include <set>

#include "protoeval/errors.h"
#include "protoeval/perturb.h"
#include "protoeval/splits.h"

using namespace protoeval;

namespace {

std::vector<int> balanced_labels(int classes, int per_class) {
  std::vector<int> labels;
  for (int i = 0; i < classes * per_class; ++i) labels.push_back(i % classes);
  return labels;
}

std::map<int, std::size_t> per_class(const std::vector<std::size_t>& idx,
                                     const std::vector<int>& labels) {
  std::map<int, std::size_t> out;
  for (std::size_t i : idx) ++out[labels[i]];
  return out;
}

// Object in the centre, background of the given hue at full saturation.
Image scene(double hue, std::uint64_t seed) {
  Rng rng(seed);
  Image img(20, 20);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 20; ++c) {
      double rgb[3];
      const bool centre = r >= 6 && r < 14 && c >= 6 && c < 14;
      const Hsv hsv = centre ? Hsv{rng.uniform(), rng.uniform(), 1.0}
                             : Hsv{hue + 0.01 * rng.uniform(), 0.9, 0.8};
      hsv_to_rgb(hsv, rgb[0], rgb[1], rgb[2]);
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = rgb[ch];
    }
  }
  return img;
}

}  // namespace

TEST(StratifiedSplits, TwoByFortyCounts) {
  const auto labels = balanced_labels(2, 40);
  const StratifiedSplit s = stratified_splits(labels, 17);
  EXPECT_EQ(per_class(s.test, labels), (std::map<int, std::size_t>{{0, 12}, {1, 12}}));
  ASSERT_EQ(s.folds.size(), 4u);
  for (const auto& f : s.folds) {
    EXPECT_EQ(per_class(f.val, labels), (std::map<int, std::size_t>{{0, 7}, {1, 7}}));
    EXPECT_EQ(per_class(f.train, labels), (std::map<int, std::size_t>{{0, 21}, {1, 21}}));
  }
}

TEST(StratifiedSplits, DisjointCoveringAndDeterministic) {
  for (int classes : {2, 3, 5}) {
    std::vector<int> labels;
    for (int k = 0; k < classes; ++k) {
      for (int i = 0; i < 8 + 3 * k; ++i) labels.push_back(k);
    }
    const StratifiedSplit s = stratified_splits(labels, 99);
    const StratifiedSplit again = stratified_splits(labels, 99);
    EXPECT_EQ(s.test, again.test);
    EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
    std::set<std::size_t> vals;
    for (std::size_t f = 0; f < s.folds.size(); ++f) {
      EXPECT_EQ(s.folds[f].val, again.folds[f].val);
      std::set<std::size_t> all(s.test.begin(), s.test.end());
      for (std::size_t i : s.folds[f].train) EXPECT_TRUE(all.insert(i).second);
      for (std::size_t i : s.folds[f].val) {
        EXPECT_TRUE(all.insert(i).second);
        EXPECT_TRUE(vals.insert(i).second);  // each sample validates once
      }
      EXPECT_EQ(all.size(), labels.size());
    }
    EXPECT_EQ(vals.size() + s.test.size(), labels.size());

    // Per-class test share within one sample of the global share.
    const auto test_counts = per_class(s.test, labels);
    const double share = double(s.test.size()) / labels.size();
    for (int k = 0; k < classes; ++k) {
      const double n = std::count(labels.begin(), labels.end(), k);
      EXPECT_LE(std::abs(test_counts.at(k) - share * n), 1.0);
    }
  }
  const auto labels = balanced_labels(3, 20);
  EXPECT_NE(stratified_splits(labels, 1).test, stratified_splits(labels, 2).test);
}

TEST(StratifiedSplits, RejectsDegenerateInputs) {
  EXPECT_THROW(stratified_splits(std::vector<int>(40, 0), 1), ValidationError);
  std::vector<int> labels = balanced_labels(2, 20);
  labels.push_back(7);
  try {
    stratified_splits(labels, 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
}

TEST(BorderHistogram, NormalisedAndIgnoresCentre) {
  const Image a = scene(0.3, 1), b = scene(0.3, 2);
  const auto ha = border_histogram(a), hb = border_histogram(b);
  ASSERT_EQ(ha.size(), 64u);
  double sum = 0;
  for (double v : ha) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(ha[i], hb[i], 0.15);
}

TEST(HsvSplit, SeparatesPlantedTwoHueClass) {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<bool> blue;
  for (int i = 0; i < 14; ++i) {
    const bool b = i % 7 < 3;  // 6 blue-background images, 8 orange
    images.push_back(scene(b ? 0.62 : 0.08, 100 + i));
    labels.push_back(0);
    blue.push_back(b);
  }
  for (int i = 0; i < 6; ++i) {
    images.push_back(scene(i < 2 ? 0.35 : 0.85, 200 + i));
    labels.push_back(1);
    blue.push_back(false);
  }
  const HsvSplit s = hsv_context_split(images, labels, 5);
  std::set<std::size_t> test(s.test.begin(), s.test.end());
  for (std::size_t i = 0; i < 14; ++i) EXPECT_EQ(test.count(i) == 1, blue[i]) << i;
  EXPECT_EQ(test.count(14) + test.count(15), 2u);
  EXPECT_TRUE(s.fallback_classes.empty());
  EXPECT_EQ(s.trainval.size() + s.test.size(), images.size());

  const HsvSplit again = hsv_context_split(images, labels, 5);
  EXPECT_EQ(again.test, s.test);
  EXPECT_EQ(again.trainval, s.trainval);
}

TEST(HsvSplit, IdenticalImagesFallBack) {
  const std::vector<Image> images(10, scene(0.5, 1));
  const std::vector<int> labels(10, 3);
  const HsvSplit s = hsv_context_split(images, labels, 8);
  EXPECT_EQ(s.fallback_classes, (std::vector<int>{3}));
  EXPECT_EQ(s.test.size(), 3u);
  EXPECT_EQ(s.trainval.size(), 7u);
  EXPECT_EQ(hsv_context_split(images, labels, 8).test, s.test);
}

TEST(HsvSplit, RejectsSingletonClass) {
  const std::vector<Image> images = {scene(0.1, 1), scene(0.1, 2), scene(0.5, 3)};
  const std::vector<int> labels = {0, 0, 1};
  EXPECT_THROW(hsv_context_split(images, labels, 1), ValidationError);
}
