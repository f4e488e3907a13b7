// Copyright 2026 The Scalestain Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file png_io.hpp
/// @brief Lossless 8-bit PNG encode/decode (greyscale and RGB) on libpng,
/// plus whole-file helpers.

#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "scalestain/error.hpp"
#include "scalestain/raster.hpp"

namespace scalestain {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  if (size < 0) throw IoError("cannot size " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.seekg(0);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw IoError("read failed for " + path.string());
  }
  return bytes;
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

/// zlib level for encoded tiles. Tiles are written once and read often, but
/// at level 1 encoding stays well below decode and I/O cost.
inline constexpr int kPngCompressionLevel = 1;

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  try {
    out->insert(out->end(), data, data + length);
  } catch (...) {
    png_error(png, "out of memory");
  }
}

inline void png_no_flush(png_structp) {}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(
    const RasterImage& img, int compression_level = kPngCompressionLevel) {
  if (img.empty()) throw ParameterError("cannot encode empty raster");
  std::vector<std::uint8_t> out;
  out.reserve(img.samples().size() / 2 + 1024);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = const_cast<png_bytep>(img.samples().data() + img.offset(0, y));
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  // No objects with destructors may be created past this point.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode failed");
  }
  png_set_write_fn(png, &out, detail::png_append, detail::png_no_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, compression_level);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// Decodes greyscale files to 1 channel and everything else to RGB.
inline RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw CorruptionError(std::string("png header: ") + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  if (image.width < 1 || image.height < 1 || image.width > (1u << 30) ||
      image.height > (1u << 30)) {
    png_image_free(&image);
    throw CorruptionError("png has unsupported dimensions");
  }
  RasterImage out(static_cast<int>(image.width),
                  static_cast<int>(image.height), channels);
  if (!png_image_finish_read(&image, nullptr, out.samples().data(), 0,
                             nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw CorruptionError("png decode: " + msg);
  }
  return out;
}

inline RasterImage load_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

inline void save_png(const std::filesystem::path& path, const RasterImage& img) {
  write_file(path, encode_png(img));
}

}  // namespace scalestain
