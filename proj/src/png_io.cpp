// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "mmsr/errors.hpp"

namespace mmsr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  (void)png;
  throw DataError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("load_png: cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw DataError("load_png: not a PNG file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  if (!png) throw DataError("load_png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("load_png: out of memory");
  }

  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth == 16) throw DataError("load_png: 16-bit PNG not supported: " + path);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_channels(png, info) != 3)
      throw DataError("load_png: unexpected channel count in " + path);

    std::vector<png_byte> pixels(static_cast<size_t>(h) * w * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
      rows[y] = pixels.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img = Image::zeros({3, static_cast<int64_t>(h), static_cast<int64_t>(w)});
    auto d = img.data();
    const size_t plane = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < plane; ++i) {
      d[i] = static_cast<float>(pixels[i * 3 + 0]) / 255.0f;
      d[plane + i] = static_cast<float>(pixels[i * 3 + 1]) / 255.0f;
      d[2 * plane + i] = static_cast<float>(pixels[i * 3 + 2]) / 255.0f;
    }
    return img;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

void save_png(const std::string& path, const Image& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ShapeError("save_png: expected a [3,H,W] image");
  const auto h = static_cast<png_uint_32>(image.dim(1));
  const auto w = static_cast<png_uint_32>(image.dim(2));

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("save_png: cannot open " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  if (!png) throw DataError("save_png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("save_png: out of memory");
  }

  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    auto d = image.data();
    const size_t plane = static_cast<size_t>(h) * w;
    std::vector<png_byte> row(static_cast<size_t>(w) * 3);
    for (png_uint_32 y = 0; y < h; ++y) {
      for (png_uint_32 x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          float v = d[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x];
          v = std::min(1.0f, std::max(0.0f, v));
          row[static_cast<size_t>(x) * 3 + c] =
              static_cast<png_byte>(std::lround(v * 255.0f));
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
}

}  // namespace mmsr
