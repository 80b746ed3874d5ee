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

#ifndef PROTOEVAL_PERTURB_H_
#define PROTOEVAL_PERTURB_H_

#include <cstdint>
#include <random>
#include <string_view>

#include "protoeval/types.h"

namespace protoeval {

// Seedable generator with a portable output stream. std::mt19937_64 output is
// fixed by the standard; the standard distributions are not, so uniform and
// normal variates are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound), bound >= 1, without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Independent stream seed for (run seed, key, index). Stream identity depends
// only on its key, never on scheduling order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key,
                          std::uint64_t index = 0);

struct PerturbationConfig {
  double occlusion_sigma = 0.05;
  double percentile = 95.0;
  // Relative increases (0.125 == +12.5%); 0 disables the step.
  double brightness = 0.125;
  double contrast = 0.125;
  double saturation = 0.125;
  // Fraction of the full hue circle; 0 disables.
  double hue_shift = 0.05;
  double noise_sigma = 0.05;
  // 0 disables the JPEG round trip.
  int jpeg_quality = 90;
  // Box blur side length; 0 or 1 disables.
  int blur_kernel = 3;
  std::uint64_t seed = 0;

  // No-op perturbations for both protocols (percentile unchanged).
  static PerturbationConfig identity();
  bool is_identity_occlusion() const { return occlusion_sigma == 0.0; }
  bool is_identity_photometric() const;
  // Throws ValidationError when a field is out of range.
  void validate() const;
};

// Linear-interpolation percentile of `values` (p in [0, 100]).
double percentile_value(std::span<const double> values, double p);

// Cells strictly above the p-th percentile. Throws DegenerateSaliencyError
// when the saliency has no positive value or the mask would be empty.
Mask percentile_mask(const Map2d& saliency, double percentile);

// Tightest box around the 1-cells. Throws EmptyMaskError.
BoundingBox bounding_box(const Mask& mask);

// Adds N(0, sigma^2) per channel to every pixel outside `box`, clamped to
// [0, 1]. Pixels inside the box are never touched.
Image occlude_outside(const Image& image, const BoundingBox& box, double sigma,
                      std::uint64_t seed);

// Individual photometric steps. All clamp to [0, 1].
Image adjust_brightness(const Image& image, double factor);
Image adjust_contrast(const Image& image, double factor);
Image adjust_saturation(const Image& image, double factor);
Image shift_hue(const Image& image, double turns);
Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed);
Image jpeg_roundtrip(const Image& image, int quality);
Image box_blur(const Image& image, int kernel);

// Brightness, contrast, saturation, hue, noise, JPEG, blur, in that order;
// disabled steps are skipped. Noise uses config.seed.
Image photometric_suite(const Image& image, const PerturbationConfig& config);

// Bicubic (Catmull-Rom, a = -0.5) upscaling with half-pixel alignment and
// edge replication; negative results are clamped to 0. Throws ShapeError when
// a target extent is smaller than the source.
Map2d upscale_similarity(const Map2d& map, std::size_t target_rows,
                         std::size_t target_cols);

// Min-max normalise and keep cells > 0.5. A constant map yields all ones.
Mask binarize_similarity(const Map2d& map);

// RGB <-> HSV with all components in [0, 1] and hue in turns.
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};
Hsv rgb_to_hsv(double r, double g, double b);
void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b);

// Peak signal-to-noise ratio in dB for images in [0, 1].
double psnr(const Image& a, const Image& b);

}  // namespace protoeval

#endif  // PROTOEVAL_PERTURB_H_
