#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tpi/errors.hpp"
#include "tpi/image.hpp"

namespace tpi {

namespace detail {

// Reads one PPM header token, skipping whitespace and '#' comments.
inline std::string ppm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos]));
    ++pos;
  }
  return tok;
}

inline int ppm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos, const char* what) {
  std::string tok = ppm_token(bytes, pos);
  if (tok.empty()) fail(Errc::MalformedHeader, std::string("missing ") + what);
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      fail(Errc::MalformedHeader, std::string("non-numeric ") + what + ": " + tok);
  }
  if (tok.size() > 9) fail(Errc::MalformedHeader, std::string(what) + " out of range: " + tok);
  return std::stoi(tok);
}

}  // namespace detail

// Binary PPM (P6, maxval 255), the bit-exact interchange format of the
// toolkit.
inline Image load_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  std::string magic = detail::ppm_token(bytes, pos);
  if (magic != "P6") fail(Errc::MalformedHeader, "expected magic P6, got '" + magic + "'");
  int w = detail::ppm_int(bytes, pos, "width");
  int h = detail::ppm_int(bytes, pos, "height");
  int maxval = detail::ppm_int(bytes, pos, "maxval");
  if (w < 1 || h < 1) fail(Errc::MalformedHeader, "dimensions must be >= 1");
  if (maxval != 255) fail(Errc::MaxvalUnsupported, "maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    fail(Errc::MalformedHeader, "expected single whitespace after maxval");
  ++pos;  // exactly one whitespace separates header from payload
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need)
    fail(Errc::TruncatedPayload, "payload has " + std::to_string(bytes.size() - pos) +
                                     " bytes, need " + std::to_string(need));
  Image img(w, h);
  std::copy(bytes.begin() + pos, bytes.begin() + pos + need, img.pixels.begin());
  return img;
}

// Canonical header formatting so identical images serialize to identical bytes.
inline std::vector<std::uint8_t> save_ppm(const Image& img) {
  std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + img.pixels.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::IoError, "short write to " + path);
}

}  // namespace tpi
