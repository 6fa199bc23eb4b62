#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "tpi/consistency.hpp"
#include "tpi/errors.hpp"
#include "tpi/image.hpp"
#include "tpi/rasterize.hpp"

namespace tpi {

// One accepted stamp position. polarity is the sign applied to glyph pixels.
struct Placement {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  std::int64_t score = 0;
  int polarity = 0;

  Rect rect() const { return Rect{x, y, w, h}; }
};

struct InjectionConfig {
  std::string text;
  int font_size = 30;
  int epsilon = 16;
  int repeats = 1;
  int stride = 1;
  bool allow_partial = false;
};

struct InjectionReport {
  std::vector<Placement> placements;
  int realized_max_delta = 0;
  int stamp_w = 0;
  int stamp_h = 0;
  std::vector<std::string> lines;
  int font_size = 0;
  bool partial = false;  // fewer than the requested repeats were placed
};

// Greedy position choice: among candidates whose rectangle intersects no
// occupied rectangle, the minimal score wins; ties break to smallest y, then
// smallest x (the row-major scan order).
inline Placement find_position(const ConsistencyMap& map, const std::vector<Placement>& occupied) {
  require(!map.empty(), Errc::InvalidArgument, "empty consistency map");
  bool found = false;
  Placement best;
  std::size_t i = 0;
  for (int row = 0; row < map.rows; ++row) {
    for (int col = 0; col < map.cols; ++col, ++i) {
      std::int64_t score = map.scores[i];
      if (found && score >= best.score) continue;
      Rect cand{map.x_at(col), map.y_at(row), map.stamp_w, map.stamp_h};
      bool blocked = false;
      for (const auto& p : occupied) {
        if (cand.intersects(p.rect())) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      best = Placement{cand.x, cand.y, cand.w, cand.h, score, 0};
      found = true;
    }
  }
  if (!found) fail(Errc::NoValidPosition, "no candidate avoids the occupied placements");
  return best;
}

namespace detail {

// Perturbation direction: against the regional mean luminance, so the glyph
// contrasts with its background. >= 128 pushes down, otherwise up.
inline int perturb_polarity(const Image& img, const Rect& r) {
  std::int64_t sum = 0;
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x)
      sum += img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2);
  double mean = static_cast<double>(sum) / (3.0 * r.w * r.h);
  return mean >= 128.0 ? -1 : 1;
}

// In-place stamp application; returns the realized max delta and stores the
// chosen polarity on the placement.
inline int apply_perturbation(Image& img, const TextStamp& stamp, Placement& placement,
                              int epsilon) {
  placement.polarity = perturb_polarity(img, placement.rect());
  const int shift = placement.polarity * epsilon;
  int realized = 0;
  for (int j = 0; j < stamp.height; ++j) {
    for (int i = 0; i < stamp.width; ++i) {
      if (!stamp.bit(i, j)) continue;
      for (int c = 0; c < 3; ++c) {
        std::uint8_t& v = img.at(placement.x + i, placement.y + j, c);
        int moved = std::clamp(static_cast<int>(v) + shift, 0, 255);
        realized = std::max(realized, std::abs(moved - static_cast<int>(v)));
        v = static_cast<std::uint8_t>(moved);
      }
    }
  }
  return realized;
}

}  // namespace detail

// AddPerturbation: shifts all three channels of every glyph pixel by
// polarity * epsilon, clamped to [0,255]; non-glyph pixels are untouched.
inline Image add_perturbation(const Image& img, const TextStamp& stamp, const Placement& placement,
                              int epsilon) {
  require(epsilon >= 0 && epsilon <= 255, Errc::InvalidArgument, "epsilon must be in [0,255]");
  require(placement.x >= 0 && placement.y >= 0 && placement.x + stamp.width <= img.width &&
              placement.y + stamp.height <= img.height,
          Errc::OutOfBounds, "placement outside image bounds");
  Image out = img;
  Placement p = placement;
  p.w = stamp.width;
  p.h = stamp.height;
  detail::apply_perturbation(out, stamp, p, epsilon);
  return out;
}

namespace detail {

inline InjectionReport run_injection(Image& img, const TextStamp& stamp, const ConsistencyMap& map,
                                     int epsilon, int repeats, bool allow_partial) {
  InjectionReport report;
  report.stamp_w = stamp.width;
  report.stamp_h = stamp.height;
  report.lines = stamp.lines;
  report.font_size = stamp.font_size;

  for (int i = 0; i < repeats; ++i) {
    Placement pos;
    try {
      pos = find_position(map, report.placements);
    } catch (const Error& e) {
      if (e.code() == Errc::NoValidPosition) {
        if (!allow_partial)
          fail(Errc::PlacementExhausted, "placed " + std::to_string(i) + " of " +
                                             std::to_string(repeats) + " repeats");
        report.partial = true;
        return report;
      }
      throw;
    }
    int realized = apply_perturbation(img, stamp, pos, epsilon);
    report.realized_max_delta = std::max(report.realized_max_delta, realized);
    report.placements.push_back(pos);
  }
  return report;
}

}  // namespace detail

// Algorithm: rasterize once, score every candidate rectangle once, then
// greedily place `repeats` non-overlapping stamps on the most
// color-consistent regions, shifting glyph pixels by +-epsilon.
inline std::pair<Image, InjectionReport> inject(const Image& img, const InjectionConfig& cfg) {
  require(cfg.epsilon >= 0 && cfg.epsilon <= 255, Errc::InvalidArgument,
          "epsilon must be in [0,255]");
  require(cfg.repeats >= 1, Errc::InvalidArgument, "repeats must be >= 1");

  TextStamp stamp = layout_text(cfg.text, cfg.font_size, img.width);
  if (stamp.width > img.width || stamp.height > img.height)
    fail(Errc::StampTooLarge, "stamp " + std::to_string(stamp.width) + "x" +
                                  std::to_string(stamp.height) + " exceeds image " +
                                  std::to_string(img.width) + "x" + std::to_string(img.height));

  IntegralTables tables(img);
  ConsistencyMap map = consistency_map(tables, stamp.width, stamp.height, cfg.stride);

  Image out = img;
  InjectionReport report =
      detail::run_injection(out, stamp, map, cfg.epsilon, cfg.repeats, cfg.allow_partial);
  return {std::move(out), std::move(report)};
}

// Dynamic font sizing: walk z = z_max, z_max-2, ... down to z_min and accept
// the first size whose greedy placements (r of them, pairwise disjoint) all
// stay within the normalized consistency limit c.
inline std::pair<Image, InjectionReport> inject_dynamic(const Image& img, const std::string& text,
                                                        int epsilon, int repeats, double limit,
                                                        int z_max = 50, int z_min = 10,
                                                        int stride = 1) {
  require(z_max >= z_min && z_min >= kGlyphSize, Errc::InvalidArgument,
          "need z_max >= z_min >= 8");
  require(limit >= 0.0, Errc::InvalidArgument, "consistency limit must be >= 0");
  require(epsilon >= 0 && epsilon <= 255, Errc::InvalidArgument, "epsilon must be in [0,255]");
  require(repeats >= 1, Errc::InvalidArgument, "repeats must be >= 1");

  IntegralTables tables(img);
  for (int z = z_max; z >= z_min; z -= 2) {
    TextStamp stamp;
    try {
      stamp = layout_text(text, z, img.width);
    } catch (const Error& e) {
      if (e.code() == Errc::DoesNotFit) continue;
      throw;
    }
    if (stamp.width > img.width || stamp.height > img.height) continue;

    ConsistencyMap map = consistency_map(tables, stamp.width, stamp.height, stride);
    std::vector<Placement> chosen;
    const std::int64_t n = static_cast<std::int64_t>(stamp.width) * stamp.height;
    bool ok = true;
    for (int i = 0; i < repeats && ok; ++i) {
      try {
        Placement pos = find_position(map, chosen);
        if (normalized_score(pos.score, n) > limit) {
          ok = false;
          break;
        }
        chosen.push_back(pos);
      } catch (const Error& e) {
        if (e.code() != Errc::NoValidPosition) throw;
        ok = false;
      }
    }
    if (!ok || static_cast<int>(chosen.size()) < repeats) continue;

    // The greedy placements qualified; apply them at this z.
    Image out = img;
    InjectionReport report;
    report.stamp_w = stamp.width;
    report.stamp_h = stamp.height;
    report.lines = stamp.lines;
    report.font_size = z;
    for (auto& pos : chosen) {
      int realized = detail::apply_perturbation(out, stamp, pos, epsilon);
      report.realized_max_delta = std::max(report.realized_max_delta, realized);
      report.placements.push_back(pos);
    }
    return {std::move(out), std::move(report)};
  }
  fail(Errc::ConsistencyUnreachable,
       "no font size in [" + std::to_string(z_min) + "," + std::to_string(z_max) +
           "] meets consistency limit " + std::to_string(limit));
}

}  // namespace tpi
