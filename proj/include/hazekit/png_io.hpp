#pragma once

#include <png.h>

#include <cerrno>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "error.hpp"

namespace hazekit::png {

/// Decoded PNG samples, interleaved, one uint16 per sample regardless of bit depth.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct ErrorSink {
  char message[256] = {0};
};

inline void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  if (sink) std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

inline void on_png_warning(png_structp, png_const_charp) {}

struct File {
  std::FILE* fp = nullptr;
  File(const std::string& path, const char* mode) : fp(std::fopen(path.c_str(), mode)) {}
  ~File() {
    if (fp) std::fclose(fp);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

// Only POD state lives across setjmp; the caller owns the output raster.
inline bool decode(std::FILE* fp, Raster* out, std::vector<png_bytep>* rows, std::vector<png_byte>* bytes,
                   ErrorSink* sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, sink, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->channels = png_get_channels(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  bytes->resize(rowbytes * static_cast<std::size_t>(out->height));
  rows->resize(static_cast<std::size_t>(out->height));
  for (int y = 0; y < out->height; ++y) (*rows)[y] = bytes->data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool encode(std::FILE* fp, const Raster* in, std::vector<png_bytep>* rows, ErrorSink* sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, sink, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  static constexpr int kColorTypes[] = {0, PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                        PNG_COLOR_TYPE_RGB_ALPHA};
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(in->width), static_cast<png_uint_32>(in->height), in->bit_depth,
               kColorTypes[in->channels], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

inline Raster read(const std::string& path) {
  detail::File file(path, "rb");
  if (!file.fp) throw IoError("cannot open '" + path + "' for reading: " + std::strerror(errno));
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("'" + path + "' is not a PNG file");
  }
  std::rewind(file.fp);

  Raster out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> bytes;
  detail::ErrorSink sink;
  if (!detail::decode(file.fp, &out, &rows, &bytes, &sink)) {
    throw FormatError("cannot decode PNG '" + path + "': " + sink.message);
  }
  const std::size_t count = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(count);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      out.samples[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) out.samples[i] = bytes[i];
  }
  return out;
}

inline void write(const std::string& path, const Raster& raster) {
  if (raster.channels < 1 || raster.channels > 4 || (raster.bit_depth != 8 && raster.bit_depth != 16)) {
    throw FormatError("png::write: unsupported layout for '" + path + "'");
  }
  const std::size_t per_row = static_cast<std::size_t>(raster.width) * raster.channels;
  if (raster.samples.size() != per_row * static_cast<std::size_t>(raster.height)) {
    throw FormatError("png::write: sample count does not match dimensions for '" + path + "'");
  }
  const std::size_t bytes_per = raster.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> bytes(raster.samples.size() * bytes_per);
  for (std::size_t i = 0; i < raster.samples.size(); ++i) {
    if (bytes_per == 2) {
      bytes[2 * i] = static_cast<png_byte>(raster.samples[i] >> 8);
      bytes[2 * i + 1] = static_cast<png_byte>(raster.samples[i] & 0xff);
    } else {
      bytes[i] = static_cast<png_byte>(raster.samples[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
  for (int y = 0; y < raster.height; ++y) rows[y] = bytes.data() + per_row * bytes_per * static_cast<std::size_t>(y);

  detail::File file(path, "wb");
  if (!file.fp) throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
  detail::ErrorSink sink;
  if (!detail::encode(file.fp, &raster, &rows, &sink)) {
    throw IoError("cannot encode PNG '" + path + "': " + sink.message);
  }
}

}  // namespace hazekit::png
