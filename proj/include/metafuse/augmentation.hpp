#pragma once

// Geometric augmentation applied to images before feature extraction, and the
// bilinear resize used to match an extractor's input size.
//
// augment() applies, in this order: reflection(s), rotation about the image
// centre, integer translation. Exposed pixels are filled with 0.

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "metafuse/random.hpp"

namespace metafuse {

/// Interleaved 8-bit image, RGB channel order when C = 3.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  std::uint8_t& at(std::size_t r, std::size_t c, std::size_t ch) { return pixels[(r * width + c) * channels + ch]; }
  std::uint8_t at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * channels + ch];
  }

  /// Throws DomainError unless H, W >= 1, C in {1, 3} and the buffer size matches.
  void validate() const;

  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr int kMaxShift = 30;
inline constexpr double kMaxRotationDegrees = 90.0;

struct AugmentationParams {
  int shift_x = 0;  // positive moves content right
  int shift_y = 0;  // positive moves content down
  bool flip_x = false;  // mirror left-right
  bool flip_y = false;  // mirror top-bottom
  double rotation_degrees = 0.0;  // counter-clockwise as displayed

  void validate() const;
  friend bool operator==(const AugmentationParams&, const AugmentationParams&) = default;
};

/// Shifts uniform on [-30, 30] (independently), each flip with probability 1/2,
/// rotation uniform on [0, 90]. Consumes a fixed number of draws per call.
AugmentationParams sample_params(Rng& rng);

/// Parameters for one image, derived from (seed, sample_id) only.
AugmentationParams params_for_sample(std::uint64_t seed, std::string_view sample_id);

Image augment(const Image& img, const AugmentationParams& p);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
/// Rotation about the centre. Multiples of 90 degrees are exact pixel
/// permutations whenever the centre maps onto the pixel grid (H - W even);
/// other angles resample bilinearly.
Image rotate(const Image& img, double degrees);
Image translate(const Image& img, int dx, int dy);

/// Edge-aligned bilinear resize (corner pixels map to corners), rounding half up.
Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);

/// OpenCV-backed raster I/O. Grayscale stays 1 channel; colour becomes RGB; alpha is dropped.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace metafuse
