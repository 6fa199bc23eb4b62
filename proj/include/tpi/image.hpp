#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "tpi/errors.hpp"

namespace tpi {

// 8-bit RGB raster, row-major, channels interleaved. Immutable by convention
// once built: operations return new images.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
    require(w >= 1 && h >= 1, Errc::InvalidArgument, "image dimensions must be >= 1");
  }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }

  bool same_dims(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image& o) const = default;
};

struct ConstraintReport {
  int max_delta = 0;
  int budget = 0;
  bool satisfied = false;
  std::int64_t violating_count = 0;  // pixels whose any-channel delta exceeds budget
};

inline int linf_distance(const Image& a, const Image& b) {
  require(a.same_dims(b), Errc::DimensionMismatch, "linf_distance needs equal dimensions");
  int max_delta = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    int d = std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]));
    if (d > max_delta) max_delta = d;
  }
  return max_delta;
}

inline ConstraintReport verify_constraint(const Image& orig, const Image& injected, int epsilon) {
  require(orig.same_dims(injected), Errc::DimensionMismatch,
          "verify_constraint needs equal dimensions");
  require(epsilon >= 0 && epsilon <= 255, Errc::InvalidArgument, "epsilon must be in [0,255]");
  ConstraintReport report;
  report.budget = epsilon;
  const std::size_t n = static_cast<std::size_t>(orig.width) * orig.height;
  for (std::size_t p = 0; p < n; ++p) {
    int pixel_max = 0;
    for (int c = 0; c < 3; ++c) {
      int d = std::abs(static_cast<int>(orig.pixels[p * 3 + c]) -
                       static_cast<int>(injected.pixels[p * 3 + c]));
      if (d > pixel_max) pixel_max = d;
    }
    if (pixel_max > report.max_delta) report.max_delta = pixel_max;
    if (pixel_max > epsilon) ++report.violating_count;
  }
  report.satisfied = report.violating_count == 0;
  return report;
}

}  // namespace tpi
