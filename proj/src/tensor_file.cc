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

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "protoeval/interchange.h"

namespace protoeval {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  }
  return v;
}

std::string shape_string(const std::vector<std::uint32_t>& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_string(t.dims));
  }
}

std::vector<float> narrow(std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(values[i]);
  }
  return out;
}

std::uint32_t dim(std::size_t extent) {
  if (extent == 0 || extent > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("tensor extent out of range: " + std::to_string(extent));
  }
  return static_cast<std::uint32_t>(extent);
}

}  // namespace

std::size_t Tensor::element_count() const {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.rank() < 1 || tensor.rank() > kMaxTensorRank) {
    throw ValidationError("tensor rank must be in [1,4], got " +
                          std::to_string(tensor.rank()));
  }
  for (auto d : tensor.dims) {
    if (d == 0) throw ValidationError("tensor has an empty dimension");
  }
  if (tensor.data.size() != tensor.element_count()) {
    throw ShapeError("tensor data length " + std::to_string(tensor.data.size()) +
                     " does not match shape " + shape_string(tensor.dims));
  }
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * tensor.rank() + 4 * tensor.data.size());
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float f : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("tensor file truncated in header");
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw FormatError("bad tensor magic (expected \"QPT1\")");
  }
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank < 1 || rank > kMaxTensorRank) {
    throw FormatError("tensor rank " + std::to_string(rank) +
                      " outside [1,4]");
  }
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw FormatError("tensor file truncated in dims");

  Tensor t;
  t.dims.resize(rank);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims[i] = get_u32(bytes, 8 + 4 * i);
    if (t.dims[i] == 0) throw FormatError("tensor dimension of extent 0");
    count *= t.dims[i];
    if (count > (bytes.size() - header) / 4 + 1) {
      throw FormatError("tensor file truncated: shape " +
                        shape_string(t.dims) + " exceeds data");
    }
  }
  if (bytes.size() != header + 4 * count) {
    throw FormatError(bytes.size() < header + 4 * count
                          ? "tensor file truncated in data"
                          : "tensor file has trailing bytes");
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  if (tensor.data.empty()) throw ValidationError("refusing to write an empty tensor");
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create tensor file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor make_tensor(std::vector<std::uint32_t> dims, std::vector<float> data) {
  Tensor t{std::move(dims), std::move(data)};
  if (t.data.size() != t.element_count()) {
    throw ShapeError("data length does not match shape " + shape_string(t.dims));
  }
  return t;
}

Tensor tensor_from(const Map2d& map) {
  return make_tensor({dim(map.rows), dim(map.cols)}, narrow(map.values));
}

Tensor tensor_from(const std::vector<Map2d>& maps) {
  if (maps.empty()) throw ShapeError("cannot store an empty map stack");
  const std::size_t rows = maps.front().rows, cols = maps.front().cols;
  std::vector<float> data;
  data.reserve(maps.size() * rows * cols);
  for (const auto& m : maps) {
    if (m.rows != rows || m.cols != cols) {
      throw ShapeError("map stack with inconsistent extents");
    }
    auto part = narrow(m.values);
    data.insert(data.end(), part.begin(), part.end());
  }
  return make_tensor({dim(maps.size()), dim(rows), dim(cols)}, std::move(data));
}

Tensor tensor_from(const Image& image) {
  return make_tensor({dim(image.height), dim(image.width), Image::kChannels},
                     narrow(image.pixels));
}

Tensor tensor_from(const FeatureMap& features) {
  return make_tensor(
      {dim(features.height), dim(features.width), dim(features.depth)},
      narrow(features.values));
}

Tensor tensor_from(std::span<const double> values) {
  return make_tensor({dim(values.size())}, narrow(values));
}

Map2d to_map(const Tensor& tensor) {
  require_rank(tensor, 2, "map");
  return Map2d(tensor.dims[0], tensor.dims[1],
               std::vector<double>(tensor.data.begin(), tensor.data.end()));
}

std::vector<Map2d> to_maps(const Tensor& tensor) {
  require_rank(tensor, 3, "map stack");
  const std::size_t n = tensor.dims[0], rows = tensor.dims[1],
                    cols = tensor.dims[2];
  std::vector<Map2d> maps;
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto first = tensor.data.begin() + static_cast<std::ptrdiff_t>(i * rows * cols);
    maps.emplace_back(rows, cols,
                      std::vector<double>(first, first + static_cast<std::ptrdiff_t>(rows * cols)));
  }
  return maps;
}

Image to_image(const Tensor& tensor) {
  require_rank(tensor, 3, "image");
  if (tensor.dims[2] != Image::kChannels) {
    throw ShapeError("image must have 3 channels, got shape " +
                     shape_string(tensor.dims));
  }
  Image image(tensor.dims[0], tensor.dims[1]);
  image.pixels.assign(tensor.data.begin(), tensor.data.end());
  return image;
}

FeatureMap to_feature_map(const Tensor& tensor) {
  require_rank(tensor, 3, "feature map");
  FeatureMap fm(tensor.dims[0], tensor.dims[1], tensor.dims[2]);
  fm.values.assign(tensor.data.begin(), tensor.data.end());
  return fm;
}

std::vector<double> to_vector(const Tensor& tensor) {
  require_rank(tensor, 1, "vector");
  return {tensor.data.begin(), tensor.data.end()};
}

}  // namespace protoeval
