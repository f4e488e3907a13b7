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

/// @file raster.hpp
/// @brief 8-bit row-major rasters and the RGB pixel type.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scalestain/error.hpp"

namespace scalestain {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit raster with 1 (density) or 3 (RGB) channels.
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1) {
      throw ParameterError("raster dimensions must be positive, got " +
                           std::to_string(width) + "x" +
                           std::to_string(height));
    }
    if (channels != 1 && channels != 3) {
      throw ParameterError("raster channels must be 1 or 3, got " +
                           std::to_string(channels));
    }
    samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  RasterImage(int width, int height, int channels,
              std::vector<std::uint8_t> samples)
      : RasterImage(width, height, channels) {
    if (samples.size() != samples_.size()) {
      throw ParameterError("sample count does not match raster geometry");
    }
    samples_ = std::move(samples);
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  [[nodiscard]] std::span<const std::uint8_t> samples() const {
    return samples_;
  }
  [[nodiscard]] std::span<std::uint8_t> samples() { return samples_; }

  [[nodiscard]] std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const {
    return samples_[offset(x, y) + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) { return samples_[offset(x, y) + c]; }

  [[nodiscard]] Rgb rgb(int x, int y) const {
    const std::size_t o = offset(x, y);
    return {samples_[o], samples_[o + 1], samples_[o + 2]};
  }
  void set_rgb(int x, int y, const Rgb& v) {
    const std::size_t o = offset(x, y);
    samples_[o] = v[0];
    samples_[o + 1] = v[1];
    samples_[o + 2] = v[2];
  }

  /// Copies the w x h rectangle at (x, y). The rectangle must lie inside.
  [[nodiscard]] RasterImage crop(int x, int y, int w, int h) const {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > width_ ||
        y + h > height_) {
      throw BoundsError("crop rectangle outside raster");
    }
    RasterImage out(w, h, channels_);
    const std::size_t row_bytes = static_cast<std::size_t>(w) * channels_;
    for (int r = 0; r < h; ++r) {
      const auto* src = samples_.data() + offset(x, y + r);
      std::copy(src, src + row_bytes, out.samples_.data() + out.offset(0, r));
    }
    return out;
  }

  /// Writes `src` with its top-left corner at (x, y).
  void paste(const RasterImage& src, int x, int y) {
    if (src.channels_ != channels_ || x < 0 || y < 0 ||
        x + src.width_ > width_ || y + src.height_ > height_) {
      throw BoundsError("paste rectangle outside raster");
    }
    const std::size_t row_bytes =
        static_cast<std::size_t>(src.width_) * channels_;
    for (int r = 0; r < src.height_; ++r) {
      const auto* s = src.samples_.data() + src.offset(0, r);
      std::copy(s, s + row_bytes, samples_.data() + offset(x, y + r));
    }
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> samples_;
};

}  // namespace scalestain
