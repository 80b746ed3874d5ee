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

#include "protoeval/perturb.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "protoeval/errors.h"

namespace protoeval {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename PixelFn>
Image map_hsv(const Image& image, PixelFn fn) {
  Image out = image;
  for (std::size_t i = 0; i < image.height * image.width; ++i) {
    double* px = &out.pixels[i * Image::kChannels];
    Hsv hsv = rgb_to_hsv(px[0], px[1], px[2]);
    fn(hsv);
    hsv_to_rgb(hsv, px[0], px[1], px[2]);
  }
  return out;
}

// Catmull-Rom cubic convolution kernel.
double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

}  // namespace

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key,
                          std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(key)) + splitmix64(index + 1));
}

PerturbationConfig PerturbationConfig::identity() {
  PerturbationConfig c;
  c.occlusion_sigma = 0.0;
  c.brightness = 0.0;
  c.contrast = 0.0;
  c.saturation = 0.0;
  c.hue_shift = 0.0;
  c.noise_sigma = 0.0;
  c.jpeg_quality = 0;
  c.blur_kernel = 0;
  return c;
}

bool PerturbationConfig::is_identity_photometric() const {
  return brightness == 0.0 && contrast == 0.0 && saturation == 0.0 &&
         hue_shift == 0.0 && noise_sigma == 0.0 && jpeg_quality == 0 &&
         blur_kernel <= 1;
}

void PerturbationConfig::validate() const {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw ValidationError("percentile must lie in (0, 100)");
  }
  if (!(occlusion_sigma >= 0.0) || !(noise_sigma >= 0.0)) {
    throw ValidationError("noise standard deviations must be >= 0");
  }
  if (jpeg_quality < 0 || jpeg_quality > 100) {
    throw ValidationError("jpeg_quality must be 0 (off) or in [1, 100]");
  }
  if (blur_kernel < 0 || (blur_kernel > 1 && blur_kernel % 2 == 0)) {
    throw ValidationError("blur_kernel must be 0, 1 or an odd size");
  }
  if (!(brightness > -1.0) || !(contrast > -1.0) || !(saturation > -1.0) ||
      !std::isfinite(hue_shift)) {
    throw ValidationError("photometric factors must be > -100%");
  }
}

double percentile_value(std::span<const double> values, double p) {
  if (values.empty()) throw ShapeError("percentile of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Mask percentile_mask(const Map2d& saliency, double percentile) {
  if (saliency.empty()) throw ShapeError("empty saliency map");
  const double peak = *std::max_element(saliency.values.begin(), saliency.values.end());
  if (!(peak > 0.0)) {
    throw DegenerateSaliencyError("saliency map has no positive value");
  }
  const double threshold = percentile_value(saliency.values, percentile);
  Mask mask(saliency.rows, saliency.cols);
  bool any = false;
  for (std::size_t i = 0; i < saliency.size(); ++i) {
    if (saliency.values[i] > threshold) {
      mask.values[i] = 1;
      any = true;
    }
  }
  if (!any) {
    throw DegenerateSaliencyError(
        "no saliency value exceeds the percentile threshold");
  }
  return mask;
}

BoundingBox bounding_box(const Mask& mask) {
  BoundingBox box{mask.rows, mask.cols, 0, 0};
  bool any = false;
  for (std::size_t r = 0; r < mask.rows; ++r) {
    for (std::size_t c = 0; c < mask.cols; ++c) {
      if (!mask.at(r, c)) continue;
      any = true;
      box.row0 = std::min(box.row0, r);
      box.col0 = std::min(box.col0, c);
      box.row1 = std::max(box.row1, r + 1);
      box.col1 = std::max(box.col1, c + 1);
    }
  }
  if (!any) throw EmptyMaskError("bounding box of an empty mask");
  return box;
}

Image occlude_outside(const Image& image, const BoundingBox& box, double sigma,
                      std::uint64_t seed) {
  if (box.row0 >= box.row1 || box.col0 >= box.col1 || box.row1 > image.height ||
      box.col1 > image.width) {
    throw ShapeError("bounding box does not fit the image");
  }
  if (sigma < 0.0) throw ValidationError("occlusion sigma must be >= 0");
  Image out = image;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      if (box.contains(r, c)) continue;
      for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
        out.at(r, c, ch) = clamp01(image.at(r, c, ch) + sigma * rng.normal());
      }
    }
  }
  return out;
}

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = (g - b) / delta;
    } else if (mx == g) {
      h = 2.0 + (b - r) / delta;
    } else {
      h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    out.h = h;
  }
  return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
  const double h6 = (hsv.h - std::floor(hsv.h)) * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double v = hsv.v, s = hsv.s;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

Image adjust_brightness(const Image& image, double factor) {
  Image out = image;
  for (double& v : out.pixels) v = clamp01(v * factor);
  return out;
}

Image adjust_contrast(const Image& image, double factor) {
  Image out = image;
  const std::size_t count = image.height * image.width;
  if (count == 0) return out;
  for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += image.pixels[i * 3 + ch];
    mean /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      double& v = out.pixels[i * 3 + ch];
      v = clamp01(mean + factor * (v - mean));
    }
  }
  return out;
}

Image adjust_saturation(const Image& image, double factor) {
  return map_hsv(image, [factor](Hsv& hsv) { hsv.s = clamp01(hsv.s * factor); });
}

Image shift_hue(const Image& image, double turns) {
  return map_hsv(image, [turns](Hsv& hsv) {
    double h = hsv.h + turns;
    h -= std::floor(h);
    hsv.h = h;
  });
}

Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  Image out = image;
  Rng rng(seed);
  for (double& v : out.pixels) v = clamp01(v + sigma * rng.normal());
  return out;
}

Image box_blur(const Image& image, int kernel) {
  if (kernel <= 1) return image;
  if (kernel % 2 == 0) throw ValidationError("blur kernel must be odd");
  const long radius = kernel / 2;
  const long h = static_cast<long>(image.height);
  const long w = static_cast<long>(image.width);
  const double norm = 1.0 / static_cast<double>(kernel * kernel);
  Image out(image.height, image.width);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
        double acc = 0.0;
        for (long dr = -radius; dr <= radius; ++dr) {
          const long rr = std::clamp(r + dr, 0L, h - 1);
          for (long dc = -radius; dc <= radius; ++dc) {
            const long cc = std::clamp(c + dc, 0L, w - 1);
            acc += image.at(rr, cc, ch);
          }
        }
        out.at(r, c, ch) = clamp01(acc * norm);
      }
    }
  }
  return out;
}

Image photometric_suite(const Image& image, const PerturbationConfig& config) {
  config.validate();
  for (double v : image.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("photometric input must lie in [0, 1]");
    }
  }
  Image out = image;
  if (config.brightness != 0.0) out = adjust_brightness(out, 1.0 + config.brightness);
  if (config.contrast != 0.0) out = adjust_contrast(out, 1.0 + config.contrast);
  if (config.saturation != 0.0) out = adjust_saturation(out, 1.0 + config.saturation);
  if (config.hue_shift != 0.0) out = shift_hue(out, config.hue_shift);
  if (config.noise_sigma != 0.0) {
    out = add_gaussian_noise(out, config.noise_sigma, config.seed);
  }
  if (config.jpeg_quality != 0) out = jpeg_roundtrip(out, config.jpeg_quality);
  if (config.blur_kernel > 1) out = box_blur(out, config.blur_kernel);
  return out;
}

Map2d upscale_similarity(const Map2d& map, std::size_t target_rows,
                         std::size_t target_cols) {
  if (map.empty()) throw ShapeError("cannot upscale an empty map");
  if (target_rows < map.rows || target_cols < map.cols) {
    throw ShapeError("upscale target is smaller than the source map");
  }
  const double sy = static_cast<double>(map.rows) / static_cast<double>(target_rows);
  const double sx = static_cast<double>(map.cols) / static_cast<double>(target_cols);
  const long rows = static_cast<long>(map.rows);
  const long cols = static_cast<long>(map.cols);
  Map2d out(target_rows, target_cols);
  for (std::size_t y = 0; y < target_rows; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    const long y0 = static_cast<long>(std::floor(fy));
    const double ty = fy - static_cast<double>(y0);
    double wy[4];
    for (int i = 0; i < 4; ++i) wy[i] = cubic_weight(ty - (i - 1));
    for (std::size_t x = 0; x < target_cols; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      const long x0 = static_cast<long>(std::floor(fx));
      const double tx = fx - static_cast<double>(x0);
      double wx[4];
      for (int j = 0; j < 4; ++j) wx[j] = cubic_weight(tx - (j - 1));
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        const long yy = std::clamp(y0 + i - 1, 0L, rows - 1);
        double row = 0.0;
        for (int j = 0; j < 4; ++j) {
          const long xx = std::clamp(x0 + j - 1, 0L, cols - 1);
          row += wx[j] * map.at(yy, xx);
        }
        acc += wy[i] * row;
      }
      out.at(y, x) = std::max(0.0, acc);
    }
  }
  return out;
}

Mask binarize_similarity(const Map2d& map) {
  if (map.empty()) throw ShapeError("cannot binarize an empty map");
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  Mask mask(map.rows, map.cols, 1);
  const double range = *hi - *lo;
  if (range == 0.0) return mask;
  for (std::size_t i = 0; i < map.size(); ++i) {
    mask.values[i] = (map.values[i] - *lo) / range > 0.5 ? 1 : 0;
  }
  return mask;
}

double psnr(const Image& a, const Image& b) {
  if (a.pixels.size() != b.pixels.size()) throw ShapeError("image size mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace protoeval
