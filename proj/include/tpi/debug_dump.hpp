#pragma once

#include "tpi/consistency.hpp"
#include "tpi/image.hpp"
#include "tpi/rasterize.hpp"

namespace tpi {

// White-on-black preview of a stamp mask.
inline Image stamp_to_image(const TextStamp& stamp) {
  Image img(stamp.width, stamp.height);
  for (int y = 0; y < stamp.height; ++y)
    for (int x = 0; x < stamp.width; ++x)
      if (stamp.bit(x, y))
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = 255;
  return img;
}

// Min-max normalized grayscale heat image of a consistency map; darker =
// more consistent.
inline Image heatmap_to_image(const ConsistencyMap& map) {
  Image img(map.cols, map.rows);
  std::int64_t lo = map.scores.empty() ? 0 : map.scores[0];
  std::int64_t hi = lo;
  for (auto s : map.scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double span = hi > lo ? static_cast<double>(hi - lo) : 1.0;
  std::size_t i = 0;
  for (int y = 0; y < map.rows; ++y) {
    for (int x = 0; x < map.cols; ++x, ++i) {
      auto v = static_cast<std::uint8_t>(255.0 * static_cast<double>(map.scores[i] - lo) / span);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  }
  return img;
}

}  // namespace tpi
