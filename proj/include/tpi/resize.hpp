#pragma once

#include <algorithm>
#include <cmath>

#include "tpi/errors.hpp"
#include "tpi/image.hpp"

namespace tpi {

// Bilinear resampling with pixel-center alignment: output cell i maps to
// source coordinate (i + 0.5) * in / out - 0.5, clamped to the border.
// Channels round half-up.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  require(out_w >= 1 && out_h >= 1, Errc::InvalidArgument, "target dimensions must be >= 1");
  if (out_w == img.width && out_h == img.height) return img;

  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;

  for (int oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        double v = top * (1.0 - wy) + bot * wy;
        int q = static_cast<int>(std::floor(v + 0.5));
        out.at(ox, oy, c) = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
      }
    }
  }
  return out;
}

}  // namespace tpi
