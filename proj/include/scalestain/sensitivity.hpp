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

/// @file sensitivity.hpp
/// @brief Max-value subsampling and the family of sensitivity pyramids.
///
/// A sensitivity pyramid with start level k runs color deconvolution on level
/// k of the original pyramid and then repeatedly halves the density plane by
/// keeping the maximum of every 2x2 block. Every sample at level l > k is thus
/// the maximum over its 2^(l-k) square receptive field at level k, so a single
/// stained pixel can never disappear from the overview.

#pragma once

#include <algorithm>
#include <chrono>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scalestain/error.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/pyramid.hpp"
#include "scalestain/raster.hpp"
#include "scalestain/stain.hpp"

namespace scalestain {

/// Halves a density plane keeping the maximum of each 2x2 block. Odd edges
/// take the maximum of the pixels present.
inline RasterImage max_downsample(const RasterImage& src) {
  if (src.empty()) throw ParameterError("max_downsample of empty plane");
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
      for (int c = 0; c < ch; ++c) {
        out.at(x, y, c) = std::max({src.at(x0, y0, c), src.at(x1, y0, c),
                                    src.at(x0, y1, c), src.at(x1, y1, c)});
      }
    }
  }
  return out;
}

/// Direct per-block maximum over block x block areas (edge blocks cropped).
/// Reference for m iterated max_downsample calls with block = 2^m.
inline RasterImage block_max_oracle(const RasterImage& src, int block) {
  if (src.empty()) throw ParameterError("block_max_oracle of empty plane");
  if (block < 1 || (block & (block - 1)) != 0) {
    throw ParameterError("block size must be a power of two");
  }
  const int ow = static_cast<int>(ceil_div(src.width(), block));
  const int oh = static_cast<int>(ceil_div(src.height(), block));
  const int ch = src.channels();
  RasterImage out(ow, oh, ch);
  for (int by = 0; by < oh; ++by) {
    for (int bx = 0; bx < ow; ++bx) {
      for (int c = 0; c < ch; ++c) {
        std::uint8_t m = 0;
        for (int y = by * block; y < std::min((by + 1) * block, src.height());
             ++y) {
          for (int x = bx * block;
               x < std::min((bx + 1) * block, src.width()); ++x) {
            m = std::max(m, src.at(x, y, c));
          }
        }
        out.at(bx, by, c) = m;
      }
    }
  }
  return out;
}

/// Wall-clock seconds per pre-processing stage.
struct StageTimings {
  double file_io = 0.0;
  double deconvolution = 0.0;
  double max_subsample = 0.0;
  double other = 0.0;
  double total = 0.0;
  long long pixels_processed = 0;

  [[nodiscard]] double parts() const {
    return file_io + deconvolution + max_subsample + other;
  }
  [[nodiscard]] double megapixels_per_second() const {
    return total > 0.0 ? static_cast<double>(pixels_processed) / 1e6 / total
                       : 0.0;
  }

  StageTimings& operator+=(const StageTimings& o) {
    file_io += o.file_io;
    deconvolution += o.deconvolution;
    max_subsample += o.max_subsample;
    other += o.other;
    total += o.total;
    pixels_processed += o.pixels_processed;
    return *this;
  }
};

/// Accumulates elapsed time into a bucket when it goes out of scope.
class ScopedStopwatch {
 public:
  explicit ScopedStopwatch(double* bucket)
      : bucket_(bucket), start_(std::chrono::steady_clock::now()) {}
  ScopedStopwatch(const ScopedStopwatch&) = delete;
  ScopedStopwatch& operator=(const ScopedStopwatch&) = delete;
  ~ScopedStopwatch() {
    if (bucket_ != nullptr) {
      *bucket_ += std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start_)
                      .count();
    }
  }

 private:
  double* bucket_;
  std::chrono::steady_clock::time_point start_;
};

struct BuildPolicy {
  std::vector<int> start_levels;
  bool drop_base = true;
  int tile_size = kDefaultTileSize;
};

/// Start levels {1, ..., L}; empty when the pyramid has a single level.
inline std::vector<int> default_start_levels(const PyramidGeometry& geom) {
  std::vector<int> levels;
  for (int k = 1; k <= geom.top_level(); ++k) levels.push_back(k);
  return levels;
}

inline BuildPolicy default_policy(const PyramidGeometry& geom) {
  BuildPolicy p;
  p.start_levels = default_start_levels(geom);
  p.tile_size = geom.tile_size();
  return p;
}

/// Sorts and de-duplicates the start levels, rejecting any outside [0, L].
inline void normalize_policy(BuildPolicy& policy, const PyramidGeometry& geom) {
  std::set<int> unique;
  for (int k : policy.start_levels) {
    if (k < 0 || k > geom.top_level()) {
      throw ParameterError("start level " + std::to_string(k) +
                           " outside [0, " + std::to_string(geom.top_level()) +
                           "]");
    }
    unique.insert(k);
  }
  policy.start_levels.assign(unique.begin(), unique.end());
}

/// First level a pyramid with start level k persists. The top level is kept
/// even when it is also the dropped base.
inline int first_persisted_level(int k, int top_level, bool drop_base) {
  return (drop_base && k < top_level) ? k + 1 : k;
}

/// In-memory sensitivity pyramid covering levels [k, L].
class ImportancePyramid {
 public:
  ImportancePyramid(PyramidGeometry geometry, int start_level, bool drop_base,
                    std::vector<TileGrid> planes)
      : geometry_(std::move(geometry)),
        start_level_(start_level),
        drop_base_(drop_base),
        planes_(std::move(planes)) {}

  [[nodiscard]] const PyramidGeometry& geometry() const { return geometry_; }
  [[nodiscard]] int channels() const { return 1; }
  [[nodiscard]] int start_level() const { return start_level_; }
  [[nodiscard]] bool drop_base() const { return drop_base_; }
  [[nodiscard]] int first_level() const {
    return first_persisted_level(start_level_, geometry_.top_level(),
                                 drop_base_);
  }

  [[nodiscard]] const RasterImage& tile(const TileAddress& a) const {
    if (!geometry_.contains(a) || a.level < first_level()) {
      throw BoundsError("importance tile " + a.str() + " not persisted");
    }
    return planes_[a.level - start_level_].at(a.col, a.row);
  }

  [[nodiscard]] const TileGrid& plane(int level) const {
    if (level < first_level() || level > geometry_.top_level()) {
      throw BoundsError("importance level " + std::to_string(level) +
                        " not persisted");
    }
    return planes_[level - start_level_];
  }

  [[nodiscard]] long long persisted_tiles() const {
    long long n = 0;
    for (int l = first_level(); l <= geometry_.top_level(); ++l) {
      n += geometry_.level(l).tile_count();
    }
    return n;
  }

 private:
  PyramidGeometry geometry_;
  int start_level_;
  bool drop_base_;
  std::vector<TileGrid> planes_;
};

/// Deconvolves level k of `orig` and max-reduces it up to the top level.
/// The base plane is always computed; with drop_base it is released after
/// level k + 1 has been derived from it.
template <TileSource Source>
ImportancePyramid build_sensitivity_pyramid(const Source& orig,
                                            const StainProfile& profile, int k,
                                            bool drop_base, int workers = 0,
                                            StageTimings* timings = nullptr) {
  const PyramidGeometry& geom = orig.geometry();
  if (k < 0 || k > geom.top_level()) {
    throw ParameterError("start level " + std::to_string(k) + " outside [0, " +
                         std::to_string(geom.top_level()) + "]");
  }
  validate(profile);
  std::vector<TileGrid> planes;
  planes.reserve(geom.levels() - k);
  {
    ScopedStopwatch sw(timings ? &timings->deconvolution : nullptr);
    const LevelGeometry g = geom.level(k);
    TileGrid base;
    base.cols = g.cols;
    base.rows = g.rows;
    base.tiles.resize(static_cast<std::size_t>(g.cols) * g.rows);
    parallel_for(base.tiles.size(), workers, [&](std::size_t i) {
      const TileAddress a{k, static_cast<int>(i) % g.cols,
                          static_cast<int>(i) / g.cols};
      base.tiles[i] = density_map(orig.tile(a), profile);
    });
    planes.push_back(std::move(base));
    if (timings) {
      timings->pixels_processed += static_cast<long long>(g.width) * g.height;
    }
  }
  {
    ScopedStopwatch sw(timings ? &timings->max_subsample : nullptr);
    for (int l = k; l < geom.top_level(); ++l) {
      detail::PartialPyramid partial{&geom, 1, k, &planes};
      TileGrid next = detail::reduce_level(partial, l, workers, max_downsample);
      planes.push_back(std::move(next));
      if (timings) {
        const LevelGeometry g = geom.level(l + 1);
        timings->pixels_processed += static_cast<long long>(g.width) * g.height;
      }
    }
  }
  if (drop_base && k < geom.top_level()) {
    planes.front().tiles.clear();
    planes.front().tiles.shrink_to_fit();
  }
  return ImportancePyramid(geom, k, drop_base, std::move(planes));
}

struct PyramidBudget {
  int start_level = 0;
  long long tiles = 0;
};

/// Tile counts of the original pyramid and of all sensitivity pyramids.
struct TileBudget {
  long long original_tiles = 0;
  long long sensitivity_tiles = 0;
  double overhead_ratio = 0.0;
  std::vector<PyramidBudget> per_pyramid;
};

/// Exact tile counts by enumerating every level of every pyramid.
inline TileBudget tile_accounting(int width, int height, int tile_size,
                                  const std::vector<int>& start_levels,
                                  bool drop_base) {
  const PyramidGeometry geom(width, height, tile_size);
  BuildPolicy policy;
  policy.start_levels = start_levels;
  normalize_policy(policy, geom);
  TileBudget budget;
  budget.original_tiles = geom.total_tiles();
  for (int k : policy.start_levels) {
    PyramidBudget pb{k, 0};
    for (int l = first_persisted_level(k, geom.top_level(), drop_base);
         l <= geom.top_level(); ++l) {
      pb.tiles += geom.level(l).tile_count();
    }
    budget.sensitivity_tiles += pb.tiles;
    budget.per_pyramid.push_back(pb);
  }
  budget.overhead_ratio = static_cast<double>(budget.sensitivity_tiles) /
                          static_cast<double>(budget.original_tiles);
  return budget;
}

inline TileBudget tile_accounting(int width, int height,
                                  const BuildPolicy& policy) {
  return tile_accounting(width, height, policy.tile_size, policy.start_levels,
                         policy.drop_base);
}

}  // namespace scalestain
