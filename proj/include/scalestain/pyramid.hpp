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

/// @file pyramid.hpp
/// @brief Dyadic tiled pyramids: geometry, box-filter reduction, construction
/// and stitched region reads.
///
/// Level 0 is full resolution and each level above halves both dimensions,
/// rounding up. A pyramid stops at the first level that fits in one tile.

#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scalestain/error.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/raster.hpp"

namespace scalestain {

inline constexpr int kDefaultTileSize = 256;

struct LevelGeometry {
  int width = 0;
  int height = 0;
  int cols = 0;
  int rows = 0;

  [[nodiscard]] long long tile_count() const {
    return static_cast<long long>(cols) * rows;
  }
  friend bool operator==(const LevelGeometry&, const LevelGeometry&) = default;
};

inline constexpr long long ceil_div(long long a, long long b) {
  return (a + b - 1) / b;
}

inline LevelGeometry level_geometry(int width, int height, int tile_size,
                                    int level) {
  // Beyond 62 levels everything is already 1x1.
  const long long scale = level >= 62 ? (1LL << 62) : (1LL << level);
  LevelGeometry g;
  g.width = static_cast<int>(ceil_div(width, scale));
  g.height = static_cast<int>(ceil_div(height, scale));
  g.cols = static_cast<int>(ceil_div(g.width, tile_size));
  g.rows = static_cast<int>(ceil_div(g.height, tile_size));
  return g;
}

struct TileAddress {
  int level = 0;
  int col = 0;
  int row = 0;

  [[nodiscard]] std::string str() const {
    return std::to_string(level) + "/" + std::to_string(col) + "_" +
           std::to_string(row);
  }
  friend bool operator==(const TileAddress&, const TileAddress&) = default;
};

struct TileRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Base dimensions plus tile size; everything else is derived.
class PyramidGeometry {
 public:
  PyramidGeometry() = default;
  PyramidGeometry(int width, int height, int tile_size = kDefaultTileSize)
      : width_(width), height_(height), tile_size_(tile_size) {
    if (width < 1 || height < 1) {
      throw ParameterError("pyramid base must be non-empty");
    }
    if (tile_size < 1) throw ParameterError("tile size must be positive");
    levels_ = 1;
    while (level(levels_ - 1).tile_count() > 1) ++levels_;
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int tile_size() const { return tile_size_; }
  /// Number of levels, L + 1.
  [[nodiscard]] int levels() const { return levels_; }
  [[nodiscard]] int top_level() const { return levels_ - 1; }

  [[nodiscard]] LevelGeometry level(int l) const {
    return level_geometry(width_, height_, tile_size_, l);
  }

  [[nodiscard]] bool contains(const TileAddress& a) const {
    if (a.level < 0 || a.level >= levels_ || a.col < 0 || a.row < 0) {
      return false;
    }
    const LevelGeometry g = level(a.level);
    return a.col < g.cols && a.row < g.rows;
  }

  /// Pixel rectangle of a tile at its level; edge tiles are cropped.
  [[nodiscard]] TileRect tile_rect(const TileAddress& a) const {
    const LevelGeometry g = level(a.level);
    TileRect r;
    r.x = a.col * tile_size_;
    r.y = a.row * tile_size_;
    r.w = std::min(tile_size_, g.width - r.x);
    r.h = std::min(tile_size_, g.height - r.y);
    return r;
  }

  [[nodiscard]] long long total_tiles() const {
    long long n = 0;
    for (int l = 0; l < levels_; ++l) n += level(l).tile_count();
    return n;
  }

  friend bool operator==(const PyramidGeometry&, const PyramidGeometry&) =
      default;

 private:
  int width_ = 0;
  int height_ = 0;
  int tile_size_ = kDefaultTileSize;
  int levels_ = 0;
};

/// Halves a raster with a 2x2 box filter. Odd edges average only the pixels
/// present; rounding is half-up.
inline RasterImage downsample_avg(const RasterImage& src) {
  if (src.empty()) throw ParameterError("downsample_avg of empty raster");
  const int ow = (src.width() + 1) / 2;
  const int oh = (src.height() + 1) / 2;
  const int ch = src.channels();
  RasterImage out(ow, oh, ch);
  for (int y = 0; y < oh; ++y) {
    const int y0 = 2 * y;
    const int y1 = std::min(y0 + 1, src.height() - 1);
    for (int x = 0; x < ow; ++x) {
      const int x0 = 2 * x;
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const unsigned n = static_cast<unsigned>((x1 - x0 + 1) * (y1 - y0 + 1));
      for (int c = 0; c < ch; ++c) {
        unsigned sum = src.at(x0, y0, c);
        if (x1 != x0) sum += src.at(x1, y0, c);
        if (y1 != y0) {
          sum += src.at(x0, y1, c);
          if (x1 != x0) sum += src.at(x1, y1, c);
        }
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
      }
    }
  }
  return out;
}

/// Tiles of one level in row-major order.
struct TileGrid {
  int cols = 0;
  int rows = 0;
  std::vector<RasterImage> tiles;

  [[nodiscard]] const RasterImage& at(int col, int row) const {
    return tiles[static_cast<std::size_t>(row) * cols + col];
  }
  RasterImage& at(int col, int row) {
    return tiles[static_cast<std::size_t>(row) * cols + col];
  }
};

/// Anything that serves tiles for a contiguous range of pyramid levels.
template <typename T>
concept TileSource = requires(const T& s, const TileAddress& a) {
  { s.geometry() } -> std::convertible_to<PyramidGeometry>;
  { s.channels() } -> std::convertible_to<int>;
  { s.first_level() } -> std::convertible_to<int>;
  { s.tile(a) } -> std::convertible_to<const RasterImage&>;
};

/// In-memory dyadic pyramid of the original RGB image. Immutable once built.
class TiledPyramid {
 public:
  TiledPyramid(PyramidGeometry geometry, std::vector<TileGrid> levels)
      : geometry_(std::move(geometry)), levels_(std::move(levels)) {}

  [[nodiscard]] const PyramidGeometry& geometry() const { return geometry_; }
  [[nodiscard]] int channels() const { return 3; }
  [[nodiscard]] int first_level() const { return 0; }

  [[nodiscard]] const RasterImage& tile(const TileAddress& a) const {
    if (!geometry_.contains(a)) {
      throw BoundsError("tile " + a.str() + " outside pyramid");
    }
    const RasterImage& t = levels_[a.level].at(a.col, a.row);
    if (t.empty()) throw CorruptionError("tile " + a.str() + " missing");
    return t;
  }

  [[nodiscard]] const TileGrid& level(int l) const { return levels_.at(l); }

 private:
  PyramidGeometry geometry_;
  std::vector<TileGrid> levels_;
};

/// Stitches the w x h region at (x, y) of `level`, crossing tile boundaries.
template <TileSource Source>
RasterImage read_region(const Source& src, int level, int x, int y, int w,
                        int h) {
  const PyramidGeometry& geom = src.geometry();
  if (level < src.first_level() || level >= geom.levels()) {
    throw BoundsError("level " + std::to_string(level) + " not available");
  }
  const LevelGeometry g = geom.level(level);
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > g.width ||
      y + h > g.height) {
    throw BoundsError("region " + std::to_string(x) + "," + std::to_string(y) +
                      " " + std::to_string(w) + "x" + std::to_string(h) +
                      " outside level " + std::to_string(level) + " (" +
                      std::to_string(g.width) + "x" +
                      std::to_string(g.height) + ")");
  }
  const int ts = geom.tile_size();
  RasterImage out(w, h, src.channels());
  for (int row = y / ts; row <= (y + h - 1) / ts; ++row) {
    for (int col = x / ts; col <= (x + w - 1) / ts; ++col) {
      const TileAddress a{level, col, row};
      const TileRect r = geom.tile_rect(a);
      const RasterImage& t = src.tile(a);
      if (t.width() != r.w || t.height() != r.h ||
          t.channels() != src.channels()) {
        throw CorruptionError("tile " + a.str() + " has wrong geometry");
      }
      const int ix0 = std::max(x, r.x);
      const int iy0 = std::max(y, r.y);
      const int ix1 = std::min(x + w, r.x + r.w);
      const int iy1 = std::min(y + h, r.y + r.h);
      out.paste(t.crop(ix0 - r.x, iy0 - r.y, ix1 - ix0, iy1 - iy0), ix0 - x,
                iy0 - y);
    }
  }
  return out;
}

/// Cuts a full-level raster into tiles.
inline TileGrid tile_level(const RasterImage& level_image, int tile_size,
                           int workers = 0) {
  TileGrid grid;
  grid.cols = static_cast<int>(ceil_div(level_image.width(), tile_size));
  grid.rows = static_cast<int>(ceil_div(level_image.height(), tile_size));
  grid.tiles.resize(static_cast<std::size_t>(grid.cols) * grid.rows);
  parallel_for(grid.tiles.size(), workers, [&](std::size_t i) {
    const int col = static_cast<int>(i) % grid.cols;
    const int row = static_cast<int>(i) / grid.cols;
    const int x = col * tile_size;
    const int y = row * tile_size;
    grid.tiles[i] =
        level_image.crop(x, y, std::min(tile_size, level_image.width() - x),
                         std::min(tile_size, level_image.height() - y));
  });
  return grid;
}

namespace detail {

/// Builds level + 1 tile by tile. The 2x2 source tiles of an output tile are
/// aligned to even pixel offsets, so per-tile reduction equals reducing the
/// whole level.
template <TileSource Source, typename Reduce>
TileGrid reduce_level(const Source& src, int level, int workers,
                      Reduce&& reduce) {
  const PyramidGeometry& geom = src.geometry();
  const LevelGeometry below = geom.level(level);
  const LevelGeometry above = geom.level(level + 1);
  const int ts = geom.tile_size();
  TileGrid grid;
  grid.cols = above.cols;
  grid.rows = above.rows;
  grid.tiles.resize(static_cast<std::size_t>(above.cols) * above.rows);
  parallel_for(grid.tiles.size(), workers, [&](std::size_t i) {
    const int col = static_cast<int>(i) % above.cols;
    const int row = static_cast<int>(i) / above.cols;
    const int x = 2 * col * ts;
    const int y = 2 * row * ts;
    const int w = std::min(2 * ts, below.width - x);
    const int h = std::min(2 * ts, below.height - y);
    grid.tiles[i] = reduce(read_region(src, level, x, y, w, h));
  });
  return grid;
}

/// Pyramid under construction; exposes the finished levels as a TileSource.
struct PartialPyramid {
  const PyramidGeometry* geom;
  int channel_count;
  int first;
  const std::vector<TileGrid>* grids;

  [[nodiscard]] const PyramidGeometry& geometry() const { return *geom; }
  [[nodiscard]] int channels() const { return channel_count; }
  [[nodiscard]] int first_level() const { return first; }
  [[nodiscard]] const RasterImage& tile(const TileAddress& a) const {
    return (*grids)[a.level - first].at(a.col, a.row);
  }
};

}  // namespace detail

/// Builds the average (box-filter) pyramid of an RGB base image.
inline TiledPyramid build_average_pyramid(const RasterImage& base,
                                          int tile_size = kDefaultTileSize,
                                          int workers = 0) {
  if (base.empty()) throw ParameterError("cannot build pyramid of empty image");
  if (base.channels() != 3) {
    throw ParameterError("original pyramid requires an RGB base image");
  }
  PyramidGeometry geom(base.width(), base.height(), tile_size);
  std::vector<TileGrid> levels;
  levels.reserve(geom.levels());
  levels.push_back(tile_level(base, tile_size, workers));
  for (int l = 0; l + 1 < geom.levels(); ++l) {
    detail::PartialPyramid partial{&geom, 3, 0, &levels};
    TileGrid next = detail::reduce_level(partial, l, workers, downsample_avg);
    levels.push_back(std::move(next));
  }
  return TiledPyramid(std::move(geom), std::move(levels));
}

}  // namespace scalestain
