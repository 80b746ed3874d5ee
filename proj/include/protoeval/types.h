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

#ifndef PROTOEVAL_TYPES_H_
#define PROTOEVAL_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace protoeval {

// Row-major float32 array as stored on disk. Rank is 1..4.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t rank() const { return dims.size(); }
  std::size_t element_count() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Dense 2-D grid in row-major order.
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), values(r * c, fill) {}
  Grid(std::size_t r, std::size_t c, std::vector<T> v)
      : rows(r), cols(c), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Similarity maps, saliency maps and other real-valued planes.
using Map2d = Grid<double>;
// Binary masks; every value is 0 or 1.
using Mask = Grid<std::uint8_t>;

// RGB image, HWC layout, values nominally in [0, 1].
struct Image {
  static constexpr std::size_t kChannels = 3;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w * kChannels, fill) {}

  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return pixels[(r * width + c) * kChannels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * kChannels + ch];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Latent feature map z with H x W cells of D channels each.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t d, double fill = 0.0)
      : height(h), width(w), depth(d), values(h * w * d, fill) {}

  std::size_t cell_count() const { return height * width; }
  std::span<double> cell(std::size_t index) {
    return {values.data() + index * depth, depth};
  }
  std::span<const double> cell(std::size_t index) const {
    return {values.data() + index * depth, depth};
  }
  std::span<const double> cell(std::size_t r, std::size_t c) const {
    return cell(r * width + c);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// Grid location, row-major coordinates.
struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Half-open pixel box: rows [row0, row1), cols [col0, col1).
struct BoundingBox {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t row1 = 0;
  std::size_t col1 = 0;

  std::size_t area() const { return (row1 - row0) * (col1 - col0); }
  bool contains(std::size_t r, std::size_t c) const {
    return r >= row0 && r < row1 && c >= col0 && c < col1;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

}  // namespace protoeval

#endif  // PROTOEVAL_TYPES_H_
