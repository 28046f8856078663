#pragma once

// File formats: PFM (single-channel float) and PNG via libpng.

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "vss/error.hpp"
#include "vss/image.hpp"

namespace vss::io {

using Bytes = std::vector<std::uint8_t>;

struct Rgba8 {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  bool operator==(const Rgba8&) const = default;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to '" + path.string() + "'");
}

// ---------------------------------------------------------------- PFM

/// Little-endian single channel PFM. Rows are stored bottom-up on disk.
inline Bytes encode_pfm(const Image<float>& img) {
  std::ostringstream header;
  header << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
  const std::string h = header.str();
  Bytes out(h.begin(), h.end());
  out.reserve(out.size() + img.size() * 4);
  for (int y = img.height() - 1; y >= 0; --y) {
    for (float v : img.row(y)) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
  }
  return out;
}

inline Image<float> decode_pfm(const Bytes& bytes, const std::string& name = "<pfm>") {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw FormatError(name + ": truncated PFM header at offset " + std::to_string(start));
    return std::string(bytes.begin() + start, bytes.begin() + pos);
  };
  const std::string magic = token();
  if (magic != "Pf") throw FormatError(name + ": expected 'Pf' magic, got '" + magic + "' at offset 0");
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::logic_error&) {
    throw FormatError(name + ": malformed PFM header near offset " + std::to_string(pos));
  }
  if (width <= 0 || height <= 0) throw FormatError(name + ": non-positive PFM dimensions");
  ++pos;  // single whitespace byte terminates the header
  const std::size_t need = static_cast<std::size_t>(width) * height * 4;
  if (bytes.size() < pos + need)
    throw FormatError(name + ": PFM payload truncated at offset " + std::to_string(bytes.size()));
  const bool little = scale < 0.0;
  Image<float> img(width, height);
  const std::uint8_t* p = bytes.data() + pos;
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x, p += 4) {
      std::uint32_t bits = little ? (p[0] | p[1] << 8 | p[2] << 16 | std::uint32_t(p[3]) << 24)
                                  : (p[3] | p[2] << 8 | p[1] << 16 | std::uint32_t(p[0]) << 24);
      img(x, y) = std::bit_cast<float>(bits);
    }
  }
  return img;
}

// ---------------------------------------------------------------- PNG

namespace detail {

inline void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void flush_callback(png_structp) {}

struct ReadCursor {
  const Bytes* bytes;
  std::size_t pos;
};

inline void read_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + length > cur->bytes->size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(data, cur->bytes->data() + cur->pos, length);
  cur->pos += length;
}

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw Error("libpng: cannot allocate writer");
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;
};

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw Error("libpng: cannot allocate reader");
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

// Row pointers must be prepared by the caller; no C++ object is created
// between setjmp and the libpng calls.
inline bool write_rows(PngWriter& w, Bytes& out, int width, int height, int bit_depth, int color_type,
                       png_bytepp rows, const png_color* palette, int palette_size) {
  if (setjmp(png_jmpbuf(w.png))) return false;
  png_set_write_fn(w.png, &out, write_callback, flush_callback);
  png_set_compression_level(w.png, 6);
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (palette) png_set_PLTE(w.png, w.info, palette, palette_size);
  png_write_info(w.png, w.info);
  if (bit_depth == 16) png_set_swap(w.png);
  png_write_image(w.png, rows);
  png_write_end(w.png, nullptr);
  return true;
}

template <typename Pixel>
Bytes encode(const Image<Pixel>& img, int bit_depth, int color_type, const png_color* palette = nullptr,
             int palette_size = 0) {
  if (img.empty()) throw Error("cannot encode an empty image as PNG");
  std::vector<Pixel> copy(img.pixels().begin(), img.pixels().end());
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y)
    rows[y] = reinterpret_cast<png_bytep>(copy.data() + static_cast<std::size_t>(y) * img.width());
  Bytes out;
  PngWriter w;
  if (!write_rows(w, out, img.width(), img.height(), bit_depth, color_type, rows.data(), palette, palette_size))
    throw Error("libpng: write failed");
  return out;
}

}  // namespace detail

inline Bytes encode_png(const Image<Rgba8>& img) {
  static_assert(sizeof(Rgba8) == 4);
  return detail::encode(img, 8, PNG_COLOR_TYPE_RGBA);
}

inline Bytes encode_png_gray8(const Image<std::uint8_t>& img) {
  return detail::encode(img, 8, PNG_COLOR_TYPE_GRAY);
}

/// 16-bit grayscale; samples are written big-endian as PNG requires.
inline Bytes encode_png_gray16(const Image<std::uint16_t>& img) {
  return detail::encode(img, 16, PNG_COLOR_TYPE_GRAY);
}

/// 8-bit indexed PNG with a caller-supplied palette (at most 256 entries).
inline Bytes encode_png_indexed(const Image<std::uint8_t>& img, const std::vector<std::array<std::uint8_t, 3>>& palette) {
  std::vector<png_color> pal;
  for (const auto& c : palette) pal.push_back(png_color{c[0], c[1], c[2]});
  return detail::encode(img, 8, PNG_COLOR_TYPE_PALETTE, pal.data(), static_cast<int>(pal.size()));
}

struct GrayPng {
  int bit_depth = 0;
  Image<std::uint16_t> pixels;
};

namespace detail {

inline bool read_header(PngReader& r, ReadCursor& cursor, png_uint_32& width, png_uint_32& height, int& bit_depth,
                        int& color_type) {
  if (setjmp(png_jmpbuf(r.png))) return false;
  png_set_read_fn(r.png, &cursor, read_callback);
  png_read_info(r.png, r.info);
  png_get_IHDR(r.png, r.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  return true;
}

inline bool read_body(PngReader& r, png_bytepp rows) {
  if (setjmp(png_jmpbuf(r.png))) return false;
  png_read_image(r.png, rows);
  png_read_end(r.png, nullptr);
  return true;
}

}  // namespace detail

/// Decodes a grayscale PNG (8 or 16 bit, no alpha) into raw sample values.
inline GrayPng decode_png_gray(const Bytes& bytes, const std::string& name = "<png>") {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw FormatError(name + ": not a PNG file (bad signature at offset 0)");
  detail::PngReader r;
  detail::ReadCursor cursor{&bytes, 0};
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  if (!detail::read_header(r, cursor, width, height, bit_depth, color_type))
    throw FormatError(name + ": corrupt PNG header");
  if (color_type != PNG_COLOR_TYPE_GRAY || (bit_depth != 8 && bit_depth != 16))
    throw FormatError(name + ": expected 8- or 16-bit grayscale PNG");
  GrayPng out{bit_depth, Image<std::uint16_t>(static_cast<int>(width), static_cast<int>(height))};
  const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
  std::vector<std::uint8_t> raw(stride * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * stride;
  if (!detail::read_body(r, rows.data())) throw FormatError(name + ": corrupt PNG data");
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      const std::uint8_t* p = rows[y] + x * (bit_depth / 8);
      out.pixels(static_cast<int>(x), static_cast<int>(y)) =
          bit_depth == 16 ? static_cast<std::uint16_t>(p[0] << 8 | p[1]) : p[0];
    }
  }
  return out;
}

/// Decodes any PNG to 8-bit RGBA. Used by tests to inspect rendered output.
inline Image<Rgba8> decode_png_rgba(const Bytes& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  Image<Rgba8> out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels().data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png: ") + image.message);
  }
  return out;
}

}  // namespace vss::io
