#include "metafuse/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "metafuse/error.hpp"

namespace metafuse {
namespace {

std::uint8_t round_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

/// Bilinear sample at fractional (r, c); taps outside the image read as 0.
double sample_zero_padded(const Image& img, double r, double c, std::size_t ch) {
  const double r0f = std::floor(r);
  const double c0f = std::floor(c);
  const double fr = r - r0f;
  const double fc = c - c0f;
  const auto h = static_cast<long long>(img.height);
  const auto w = static_cast<long long>(img.width);
  const auto r0 = static_cast<long long>(r0f);
  const auto c0 = static_cast<long long>(c0f);
  const auto tap = [&](long long rr, long long cc) -> double {
    if (rr < 0 || cc < 0 || rr >= h || cc >= w) return 0.0;
    return img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), ch);
  };
  double v = 0.0;
  if ((1.0 - fr) * (1.0 - fc) != 0.0) v += (1.0 - fr) * (1.0 - fc) * tap(r0, c0);
  if ((1.0 - fr) * fc != 0.0) v += (1.0 - fr) * fc * tap(r0, c0 + 1);
  if (fr * (1.0 - fc) != 0.0) v += fr * (1.0 - fc) * tap(r0 + 1, c0);
  if (fr * fc != 0.0) v += fr * fc * tap(r0 + 1, c0 + 1);
  return v;
}

Image rotate_quarter_exact(const Image& img) {
  // Requires (H - W) even so the centre lands on the grid.
  Image out(img.height, img.width, img.channels, 0);
  const auto h = static_cast<long long>(img.height);
  const auto w = static_cast<long long>(img.width);
  for (long long r = 0; r < h; ++r) {
    for (long long c = 0; c < w; ++c) {
      const long long sr = c + (h - w) / 2;
      const long long sc = (h + w) / 2 - 1 - r;
      if (sr < 0 || sc < 0 || sr >= h || sc >= w) continue;
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) =
            img.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc), ch);
      }
    }
  }
  return out;
}

}  // namespace

void Image::validate() const {
  if (height == 0 || width == 0) throw DomainError("image dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw DomainError("image must have 1 or 3 channels");
  if (pixels.size() != height * width * channels) throw DomainError("image buffer size does not match dimensions");
}

void AugmentationParams::validate() const {
  if (std::abs(shift_x) > kMaxShift || std::abs(shift_y) > kMaxShift) {
    throw DomainError("augmentation shift outside [-30, 30]");
  }
  if (!(rotation_degrees >= 0.0 && rotation_degrees <= kMaxRotationDegrees)) {
    throw DomainError("augmentation rotation outside [0, 90]");
  }
}

AugmentationParams sample_params(Rng& rng) {
  AugmentationParams p;
  p.shift_x = static_cast<int>(uniform_int(rng, -kMaxShift, kMaxShift));
  p.shift_y = static_cast<int>(uniform_int(rng, -kMaxShift, kMaxShift));
  p.flip_x = coin_flip(rng);
  p.flip_y = coin_flip(rng);
  // 53-bit grid on [0, 1], so both 0 and 90 are reachable.
  p.rotation_degrees = static_cast<double>(uniform_below(rng, (1ULL << 53) + 1)) * 0x1.0p-53 * kMaxRotationDegrees;
  return p;
}

AugmentationParams params_for_sample(std::uint64_t seed, std::string_view sample_id) {
  Rng rng(derive_seed(seed, sample_id));
  return sample_params(rng);
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) out.at(r, img.width - 1 - c, ch) = img.at(r, c, ch);
    }
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out(img.height, img.width, img.channels);
  const std::size_t stride = img.width * img.channels;
  for (std::size_t r = 0; r < img.height; ++r) {
    std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(r * stride), stride,
                out.pixels.begin() + static_cast<std::ptrdiff_t>((img.height - 1 - r) * stride));
  }
  return out;
}

Image rotate(const Image& img, double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a < 0) a += 360.0;
  if (a == 0.0) return img;
  const bool on_grid = (img.height % 2) == (img.width % 2);
  if (a == 90.0 && on_grid) return rotate_quarter_exact(img);

  double cs, sn;
  if (a == 90.0) {
    cs = 0.0, sn = 1.0;
  } else if (a == 180.0) {
    cs = -1.0, sn = 0.0;
  } else if (a == 270.0) {
    cs = 0.0, sn = -1.0;
  } else {
    const double rad = a * std::numbers::pi / 180.0;
    cs = std::cos(rad);
    sn = std::sin(rad);
  }

  Image out(img.height, img.width, img.channels, 0);
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  for (std::size_t r = 0; r < img.height; ++r) {
    const double dy = static_cast<double>(r) - cy;
    for (std::size_t c = 0; c < img.width; ++c) {
      const double dx = static_cast<double>(c) - cx;
      // Inverse map: output pixel -> source location.
      const double sc = cx + dx * cs - dy * sn;
      const double sr = cy + dx * sn + dy * cs;
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        out.at(r, c, ch) = round_pixel(sample_zero_padded(img, sr, sc, ch));
      }
    }
  }
  return out;
}

Image translate(const Image& img, int dx, int dy) {
  Image out(img.height, img.width, img.channels, 0);
  const auto h = static_cast<long long>(img.height);
  const auto w = static_cast<long long>(img.width);
  for (long long r = 0; r < h; ++r) {
    const long long sr = r - dy;
    if (sr < 0 || sr >= h) continue;
    for (long long c = 0; c < w; ++c) {
      const long long sc = c - dx;
      if (sc < 0 || sc >= w) continue;
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) =
            img.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc), ch);
      }
    }
  }
  return out;
}

Image augment(const Image& img, const AugmentationParams& p) {
  img.validate();
  p.validate();
  Image out = img;
  if (p.flip_x) out = flip_horizontal(out);
  if (p.flip_y) out = flip_vertical(out);
  if (p.rotation_degrees != 0.0) out = rotate(out, p.rotation_degrees);
  if (p.shift_x != 0 || p.shift_y != 0) out = translate(out, p.shift_x, p.shift_y);
  return out;
}

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  img.validate();
  if (out_h == 0 || out_w == 0) throw DomainError("resize target must be at least 1 x 1");
  if (out_h == img.height && out_w == img.width) return img;

  const auto source_coord = [](std::size_t i, std::size_t n_in, std::size_t n_out) {
    if (n_out == 1) return (static_cast<double>(n_in) - 1.0) / 2.0;
    return static_cast<double>(i) * (static_cast<double>(n_in) - 1.0) / (static_cast<double>(n_out) - 1.0);
  };

  Image out(out_h, out_w, img.channels);
  for (std::size_t r = 0; r < out_h; ++r) {
    const double sr = source_coord(r, img.height, out_h);
    const auto r0 = std::min(static_cast<std::size_t>(std::floor(sr)), img.height - 1);
    const std::size_t r1 = std::min(r0 + 1, img.height - 1);
    const double fr = sr - static_cast<double>(r0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double sc = source_coord(c, img.width, out_w);
      const auto c0 = std::min(static_cast<std::size_t>(std::floor(sc)), img.width - 1);
      const std::size_t c1 = std::min(c0 + 1, img.width - 1);
      const double fc = sc - static_cast<double>(c0);
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        const double top = (1.0 - fc) * img.at(r0, c0, ch) + fc * img.at(r0, c1, ch);
        const double bottom = (1.0 - fc) * img.at(r1, c0, ch) + fc * img.at(r1, c1, ch);
        out.at(r, c, ch) = round_pixel((1.0 - fr) * top + fr * bottom);
      }
    }
  }
  return out;
}

}  // namespace metafuse
