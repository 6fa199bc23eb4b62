#pragma once

#include <cstdint>
#include <vector>

#include "tpi/errors.hpp"
#include "tpi/image.hpp"

namespace tpi {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool intersects(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
};

// Per-channel summed-area tables of values and squared values, (W+1)x(H+1)
// with a zero first row/column. Any rectangle's channel sum and square-sum
// are retrievable in O(1) via 4-corner inclusion-exclusion.
class IntegralTables {
 public:
  explicit IntegralTables(const Image& img) : width_(img.width), height_(img.height) {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int c = 0; c < 3; ++c) {
      sum_[c].assign(stride * (height_ + 1), 0);
      sum_sq_[c].assign(stride * (height_ + 1), 0);
    }
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        for (int c = 0; c < 3; ++c) {
          std::int64_t v = img.at(x, y, c);
          std::size_t i = static_cast<std::size_t>(y + 1) * stride + (x + 1);
          sum_[c][i] = v + sum_[c][i - 1] + sum_[c][i - stride] - sum_[c][i - stride - 1];
          sum_sq_[c][i] =
              v * v + sum_sq_[c][i - 1] + sum_sq_[c][i - stride] - sum_sq_[c][i - stride - 1];
        }
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  std::int64_t channel_sum(int c, const Rect& r) const { return corner(sum_[c], r); }
  std::int64_t channel_sum_sq(int c, const Rect& r) const { return corner(sum_sq_[c], r); }

 private:
  std::int64_t corner(const std::vector<std::int64_t>& t, const Rect& r) const {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    std::size_t x0 = static_cast<std::size_t>(r.x);
    std::size_t y0 = static_cast<std::size_t>(r.y);
    std::size_t x1 = x0 + r.w;
    std::size_t y1 = y0 + r.h;
    return t[y1 * stride + x1] - t[y1 * stride + x0] - t[y0 * stride + x1] + t[y0 * stride + x0];
  }

  int width_;
  int height_;
  std::vector<std::int64_t> sum_[3];
  std::vector<std::int64_t> sum_sq_[3];
};

inline IntegralTables build_integrals(const Image& img) { return IntegralTables(img); }

// Color-consistency score of a rectangle: sum over channels of
// n * sum(x^2) - (sum(x))^2, i.e. n^2 times the per-channel population
// variance, summed. Zero iff the region is constant per channel; lower is
// more consistent. Shift-invariant and exact in integers.
inline std::int64_t region_score(const IntegralTables& tables, const Rect& rect) {
  require(rect.w >= 1 && rect.h >= 1, Errc::OutOfBounds, "empty rectangle");
  require(rect.x >= 0 && rect.y >= 0 && rect.x + rect.w <= tables.width() &&
              rect.y + rect.h <= tables.height(),
          Errc::OutOfBounds, "rectangle outside image bounds");
  const std::int64_t n = static_cast<std::int64_t>(rect.w) * rect.h;
  __int128 score = 0;
  for (int c = 0; c < 3; ++c) {
    __int128 s = tables.channel_sum(c, rect);
    __int128 ss = tables.channel_sum_sq(c, rect);
    score += static_cast<__int128>(n) * ss - s * s;
  }
  return static_cast<std::int64_t>(score);
}

// Mean per-channel population variance of a region with the given score and
// pixel count; ranges over [0, 16256.25] for 8-bit channels.
inline double normalized_score(std::int64_t score, std::int64_t n) {
  require(n >= 1, Errc::InvalidArgument, "pixel count must be >= 1");
  return static_cast<double>(score) / (3.0 * static_cast<double>(n) * static_cast<double>(n));
}

inline constexpr double kMaxNormalizedScore = 16256.25;  // (255/2)^2

// Scores for every candidate top-left (x, y) with x and y multiples of
// stride and the stamp fully inside the image; row-major.
struct ConsistencyMap {
  int stamp_w = 0;
  int stamp_h = 0;
  int stride = 1;
  int cols = 0;
  int rows = 0;
  std::vector<std::int64_t> scores;

  int x_at(int col) const { return col * stride; }
  int y_at(int row) const { return row * stride; }
  std::int64_t score_at(int col, int row) const {
    return scores[static_cast<std::size_t>(row) * cols + col];
  }
  bool empty() const { return scores.empty(); }
};

inline ConsistencyMap consistency_map(const IntegralTables& tables, int stamp_w, int stamp_h,
                                      int stride = 1) {
  require(stride >= 1, Errc::InvalidArgument, "stride must be >= 1");
  require(stamp_w >= 1 && stamp_h >= 1, Errc::InvalidArgument, "stamp dimensions must be >= 1");
  if (stamp_w > tables.width() || stamp_h > tables.height())
    fail(Errc::StampTooLarge, "stamp " + std::to_string(stamp_w) + "x" + std::to_string(stamp_h) +
                                  " exceeds image " + std::to_string(tables.width()) + "x" +
                                  std::to_string(tables.height()));

  ConsistencyMap map;
  map.stamp_w = stamp_w;
  map.stamp_h = stamp_h;
  map.stride = stride;
  map.cols = (tables.width() - stamp_w) / stride + 1;
  map.rows = (tables.height() - stamp_h) / stride + 1;
  map.scores.resize(static_cast<std::size_t>(map.cols) * map.rows);

  std::size_t i = 0;
  for (int row = 0; row < map.rows; ++row) {
    for (int col = 0; col < map.cols; ++col) {
      Rect r{col * stride, row * stride, stamp_w, stamp_h};
      map.scores[i++] = region_score(tables, r);
    }
  }
  return map;
}

}  // namespace tpi
