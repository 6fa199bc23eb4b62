#pragma once

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <vector>

#include "tpi/errors.hpp"
#include "tpi/image.hpp"

namespace tpi {

namespace detail {

struct PngMemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
  auto* ctx = static_cast<PngMemReader*>(png_get_io_ptr(png));
  if (ctx->pos + n > ctx->size) png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, ctx->data + ctx->pos, n);
  ctx->pos += n;
}

inline void png_mem_write(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

inline void png_mem_flush(png_structp) {}

// libpng reports errors via longjmp, so each jump target lives in a frame
// that holds no C++ objects; callers keep their containers intact.
inline bool png_decode_header(png_structp png, png_infop info, png_uint_32* w, png_uint_32* h) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  *w = png_get_image_width(png, info);
  *h = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  return png_get_rowbytes(png, info) == static_cast<std::size_t>(*w) * 3;
}

inline bool png_decode_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

inline bool png_encode_all(png_structp png, png_infop info, int w, int h, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace detail

// Lossless 8-bit RGB PNG. PNG exists for endpoint transport only: JPEG-style
// lossy codecs would destroy epsilon-scale perturbations.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() + img.index(0, y, 0));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(Errc::PngEncodeError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(Errc::PngEncodeError, "png_create_info_struct failed");
  }
  png_set_write_fn(png, &out, detail::png_mem_write, detail::png_mem_flush);
  bool ok = detail::png_encode_all(png, info, img.width, img.height, rows.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) fail(Errc::PngEncodeError, "libpng write error");
  return out;
}

// Decodes any PNG to 8-bit RGB: palette and gray expand, 16-bit depths are
// stripped, alpha is dropped.
inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    fail(Errc::PngDecodeError, "not a PNG signature");

  detail::PngMemReader reader{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(Errc::PngDecodeError, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(Errc::PngDecodeError, "png_create_info_struct failed");
  }
  png_set_read_fn(png, &reader, detail::png_mem_read);

  png_uint_32 w = 0, h = 0;
  if (!detail::png_decode_header(png, info, &w, &h) || w < 1 || h < 1) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Errc::PngDecodeError, "failed to read PNG header as RGB8");
  }

  Image img(static_cast<int>(w), static_cast<int>(h));
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = img.pixels.data() + img.index(0, static_cast<int>(y), 0);

  bool ok = detail::png_decode_rows(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) fail(Errc::PngDecodeError, "libpng read error");
  return img;
}

}  // namespace tpi
