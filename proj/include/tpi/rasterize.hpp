#pragma once

#include <string>
#include <vector>

#include "tpi/errors.hpp"
#include "tpi/font8x8.hpp"

namespace tpi {

// Binary coverage mask of a rasterized prompt. mask is row-major, one byte
// per cell, 1 = text pixel.
struct TextStamp {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;
  std::vector<std::string> lines;
  int font_size = 0;

  bool bit(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }

  std::size_t set_bits() const {
    std::size_t n = 0;
    for (auto b : mask) n += b;
    return n;
  }
};

inline int line_gap_for(int font_size) { return (font_size + 7) / 8; }

namespace detail {

inline void check_text(const std::string& text, int font_size) {
  require(!text.empty(), Errc::EmptyText, "text must be non-empty");
  for (char c : text) {
    if (!is_printable_ascii(c))
      fail(Errc::UnsupportedGlyph,
           "code point " + std::to_string(static_cast<unsigned char>(c)) + " has no glyph");
  }
  require(font_size >= kGlyphSize, Errc::FontTooSmall,
          "font size " + std::to_string(font_size) + " below minimum 8");
}

// Draws one z-by-z glyph cell at (cell_x, top) using nearest-neighbor:
// target (i, j) samples source (i*8/z, j*8/z).
inline void blit_glyph(TextStamp& stamp, char c, int cell_x, int top, int z) {
  for (int j = 0; j < z; ++j) {
    int src_row = j * kGlyphSize / z;
    std::uint8_t row_bits = glyph_bitmap(c)[static_cast<std::size_t>(src_row)];
    std::size_t base = static_cast<std::size_t>(top + j) * stamp.width + cell_x;
    for (int i = 0; i < z; ++i) {
      int src_col = i * kGlyphSize / z;
      stamp.mask[base + i] = (row_bits >> src_col) & 1;
    }
  }
}

inline TextStamp rasterize_lines(const std::vector<std::string>& lines, int z) {
  std::size_t max_chars = 0;
  for (const auto& line : lines) max_chars = std::max(max_chars, line.size());

  TextStamp stamp;
  stamp.font_size = z;
  stamp.lines = lines;
  stamp.width = static_cast<int>(max_chars) * z;
  const int gap = line_gap_for(z);
  stamp.height = static_cast<int>(lines.size()) * z + (static_cast<int>(lines.size()) - 1) * gap;
  stamp.mask.assign(static_cast<std::size_t>(stamp.width) * stamp.height, 0);

  int top = 0;
  for (const auto& line : lines) {
    for (std::size_t k = 0; k < line.size(); ++k)
      blit_glyph(stamp, line[k], static_cast<int>(k) * z, top, z);
    top += z + gap;
  }
  return stamp;
}

}  // namespace detail

// GetPixels for a single line: monospace cells of z x z pixels, glyph advance z.
inline TextStamp rasterize_line(const std::string& text, int z) {
  detail::check_text(text, z);
  return detail::rasterize_lines({text}, z);
}

// Multi-line GetPixels: greedy word-wrap on spaces so each line holds at most
// floor(max_width / z) characters; a word longer than a full line is
// hard-split. Lines are separated by ceil(z/8) blank rows.
inline TextStamp layout_text(const std::string& text, int z, int max_width) {
  detail::check_text(text, z);
  const int chars_per_line = max_width / z;
  require(chars_per_line >= 1, Errc::DoesNotFit,
          "max_width " + std::to_string(max_width) + " fits no glyph at size " + std::to_string(z));

  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  require(!words.empty(), Errc::EmptyText, "text contains only spaces");

  const std::size_t cpl = static_cast<std::size_t>(chars_per_line);
  std::vector<std::string> lines;
  std::string line;
  for (auto& word : words) {
    while (word.size() > cpl) {  // hard-split oversized words
      if (!line.empty()) {
        lines.push_back(line);
        line.clear();
      }
      lines.push_back(word.substr(0, cpl));
      word.erase(0, cpl);
    }
    if (line.empty()) {
      line = word;
    } else if (line.size() + 1 + word.size() <= cpl) {
      line += ' ';
      line += word;
    } else {
      lines.push_back(line);
      line = word;
    }
  }
  if (!line.empty()) lines.push_back(line);

  return detail::rasterize_lines(lines, z);
}

}  // namespace tpi
