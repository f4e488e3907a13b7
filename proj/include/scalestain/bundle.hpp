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

/// @file bundle.hpp
/// @brief On-disk slide bundles: layout, meta.json, lazily decoded tile
/// pyramids and the pre-processing pass that writes them.
///
/// Layout under a slide directory:
///
///     meta.json
///     original/<level>/<col>_<row>.png          8-bit RGB
///     importance/s<k>/<level>/<col>_<row>.png   8-bit greyscale
///
/// meta.json is written last and removed first, so a directory without it is
/// never a valid bundle.

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scalestain/error.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/png_io.hpp"
#include "scalestain/pyramid.hpp"
#include "scalestain/sensitivity.hpp"
#include "scalestain/stain.hpp"

namespace scalestain {

namespace fs = std::filesystem;

inline constexpr double kDefaultFadeRange = 2.0;

struct SlideMeta {
  std::string id;
  int width = 0;
  int height = 0;
  int tile_size = kDefaultTileSize;
  int levels = 0;
  StainProfile stain;
  std::vector<int> start_levels;
  bool drop_base = true;
  double fade_range = kDefaultFadeRange;

  [[nodiscard]] PyramidGeometry geometry() const {
    return PyramidGeometry(width, height, tile_size);
  }
  [[nodiscard]] bool has_start_level(int k) const {
    return std::find(start_levels.begin(), start_levels.end(), k) !=
           start_levels.end();
  }
};

inline void to_json(nlohmann::json& j, const SlideMeta& m) {
  j = nlohmann::json{{"id", m.id},
                     {"width", m.width},
                     {"height", m.height},
                     {"tile_size", m.tile_size},
                     {"levels", m.levels},
                     {"stain", m.stain},
                     {"start_levels", m.start_levels},
                     {"drop_base", m.drop_base},
                     {"fade_range", m.fade_range}};
}

inline void from_json(const nlohmann::json& j, SlideMeta& m) {
  try {
    m.id = j.at("id").get<std::string>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.tile_size = j.at("tile_size").get<int>();
    m.levels = j.at("levels").get<int>();
    m.stain = j.at("stain").get<StainProfile>();
    m.start_levels = j.at("start_levels").get<std::vector<int>>();
    m.drop_base = j.at("drop_base").get<bool>();
    m.fade_range = j.value("fade_range", kDefaultFadeRange);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("invalid meta.json: ") + e.what());
  }
}

inline fs::path meta_path(const fs::path& slide) { return slide / "meta.json"; }

inline fs::path original_level_dir(const fs::path& slide, int level) {
  return slide / "original" / std::to_string(level);
}

inline fs::path importance_level_dir(const fs::path& slide, int k, int level) {
  return slide / "importance" / ("s" + std::to_string(k)) /
         std::to_string(level);
}

inline std::string tile_file_name(int col, int row) {
  return std::to_string(col) + "_" + std::to_string(row) + ".png";
}

inline fs::path original_tile_path(const fs::path& slide, const TileAddress& a) {
  return original_level_dir(slide, a.level) / tile_file_name(a.col, a.row);
}

inline fs::path importance_tile_path(const fs::path& slide, int k,
                                     const TileAddress& a) {
  return importance_level_dir(slide, k, a.level) / tile_file_name(a.col, a.row);
}

/// Tile pyramid stored as one PNG per tile; tiles are decoded on demand.
class DiskPyramid {
 public:
  DiskPyramid(fs::path slide, PyramidGeometry geometry, int channels,
              int first_level, std::optional<int> start_level = std::nullopt)
      : slide_(std::move(slide)),
        geometry_(std::move(geometry)),
        channels_(channels),
        first_level_(first_level),
        start_level_(start_level) {}

  [[nodiscard]] const PyramidGeometry& geometry() const { return geometry_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] int first_level() const { return first_level_; }

  [[nodiscard]] fs::path tile_path(const TileAddress& a) const {
    return start_level_ ? importance_tile_path(slide_, *start_level_, a)
                        : original_tile_path(slide_, a);
  }

  [[nodiscard]] bool contains(const TileAddress& a) const {
    return geometry_.contains(a) && a.level >= first_level_;
  }

  /// Raw stored bytes of a tile.
  [[nodiscard]] std::vector<std::uint8_t> tile_bytes(const TileAddress& a) const {
    if (!contains(a)) throw BoundsError("tile " + a.str() + " not stored");
    try {
      return read_file(tile_path(a));
    } catch (const IoError& e) {
      throw CorruptionError("tile " + a.str() + " unreadable: " + e.what());
    }
  }

  [[nodiscard]] RasterImage tile(const TileAddress& a) const {
    const auto bytes = tile_bytes(a);
    RasterImage img;
    try {
      img = decode_png(bytes);
    } catch (const CorruptionError& e) {
      throw CorruptionError("tile " + a.str() + ": " + e.what());
    }
    const TileRect r = geometry_.tile_rect(a);
    if (img.width() != r.w || img.height() != r.h ||
        img.channels() != channels_) {
      throw CorruptionError("tile " + a.str() + " has wrong geometry");
    }
    return img;
  }

 private:
  fs::path slide_;
  PyramidGeometry geometry_;
  int channels_;
  int first_level_;
  std::optional<int> start_level_;
};

namespace detail {

/// Verifies that a level directory holds exactly the expected tile files.
inline void check_level_dir(const fs::path& dir, const LevelGeometry& g,
                            const std::string& what) {
  if (!fs::is_directory(dir)) {
    throw CorruptionError(what + ": missing directory " + dir.string());
  }
  long long found = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") ++found;
  }
  if (found != g.tile_count()) {
    throw CorruptionError(what + ": expected " + std::to_string(g.tile_count()) +
                          " tiles in " + dir.string() + ", found " +
                          std::to_string(found));
  }
  for (int row = 0; row < g.rows; ++row) {
    for (int col = 0; col < g.cols; ++col) {
      if (!fs::exists(dir / tile_file_name(col, row))) {
        throw CorruptionError(what + ": missing tile " + tile_file_name(col, row) +
                              " in " + dir.string());
      }
    }
  }
}

}  // namespace detail

/// A validated slide directory. Immutable after load.
class SlideBundle {
 public:
  /// Loads meta.json and checks it against the tiles on disk.
  static SlideBundle load(const fs::path& dir) {
    const fs::path mp = meta_path(dir);
    if (!fs::exists(mp)) throw CorruptionError("missing " + mp.string());
    nlohmann::json j;
    {
      std::ifstream in(mp);
      if (!in) throw IoError("cannot open " + mp.string());
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(mp.string() + ": " + e.what());
      }
    }
    SlideMeta meta;
    try {
      meta = j.get<SlideMeta>();
    } catch (const ParameterError& e) {
      throw CorruptionError(mp.string() + ": " + e.what());
    }
    PyramidGeometry geom;
    try {
      geom = meta.geometry();
    } catch (const ParameterError& e) {
      throw CorruptionError(mp.string() + ": " + e.what());
    }
    if (geom.levels() != meta.levels) {
      throw CorruptionError("meta.json declares " + std::to_string(meta.levels) +
                            " levels, geometry implies " +
                            std::to_string(geom.levels()));
    }
    for (int l = 0; l < geom.levels(); ++l) {
      detail::check_level_dir(original_level_dir(dir, l), geom.level(l),
                              "original level " + std::to_string(l));
    }
    for (int k : meta.start_levels) {
      if (k < 0 || k > geom.top_level()) {
        throw CorruptionError("start level " + std::to_string(k) +
                              " outside pyramid");
      }
      for (int l = first_persisted_level(k, geom.top_level(), meta.drop_base);
           l <= geom.top_level(); ++l) {
        detail::check_level_dir(importance_level_dir(dir, k, l), geom.level(l),
                                "importance s" + std::to_string(k) + " level " +
                                    std::to_string(l));
      }
    }
    return SlideBundle(dir, std::move(meta), std::move(geom));
  }

  [[nodiscard]] const fs::path& dir() const { return dir_; }
  [[nodiscard]] const SlideMeta& meta() const { return meta_; }
  [[nodiscard]] const PyramidGeometry& geometry() const { return geometry_; }

  [[nodiscard]] DiskPyramid original() const {
    return DiskPyramid(dir_, geometry_, 3, 0);
  }

  /// Persisted planes of sensitivity pyramid k.
  [[nodiscard]] DiskPyramid importance(int k) const {
    if (!meta_.has_start_level(k)) {
      throw ParameterError("unknown sensitivity " + std::to_string(k));
    }
    return DiskPyramid(
        dir_, geometry_, 1,
        first_persisted_level(k, geometry_.top_level(), meta_.drop_base), k);
  }

 private:
  SlideBundle(fs::path dir, SlideMeta meta, PyramidGeometry geom)
      : dir_(std::move(dir)), meta_(std::move(meta)), geometry_(std::move(geom)) {}

  fs::path dir_;
  SlideMeta meta_;
  PyramidGeometry geometry_;
};

struct BuildOptions {
  std::string id;  // empty: use the output directory name
  int workers = 0;
  double fade_range = kDefaultFadeRange;
};

struct BuildResult {
  SlideMeta meta;
  StageTimings timings;
};

namespace detail {

inline void write_tile(const fs::path& path, const RasterImage& tile,
                       const std::string& address) {
  try {
    save_png(path, tile);
  } catch (const Error& e) {
    throw IoError("failed to write tile " + address + ": " + e.what());
  }
}

inline void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

inline void write_meta(const fs::path& slide, const SlideMeta& meta) {
  const fs::path tmp = slide / "meta.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out << nlohmann::json(meta).dump(2) << '\n';
    out.close();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, meta_path(slide), ec);
  if (ec) throw IoError("cannot commit meta.json: " + ec.message());
}

}  // namespace detail

/// Writes the original pyramid and one sensitivity pyramid per start level
/// of `policy` into `out`, then commits meta.json.
inline BuildResult build_all(const TiledPyramid& orig,
                             const StainProfile& profile, BuildPolicy policy,
                             const fs::path& out,
                             const BuildOptions& options = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const PyramidGeometry& geom = orig.geometry();
  normalize_policy(policy, geom);
  if (policy.tile_size != geom.tile_size()) {
    throw ParameterError("policy tile size does not match the pyramid");
  }
  validate(profile);
  if (!(options.fade_range > 0.0)) {
    throw ParameterError("fade range must be positive");
  }
  BuildResult result;
  StageTimings& timings = result.timings;
  {
    ScopedStopwatch sw(&timings.file_io);
    detail::make_dirs(out);
    std::error_code ec;
    fs::remove(meta_path(out), ec);
    if (ec) throw IoError("cannot remove stale meta.json: " + ec.message());
    for (int l = 0; l < geom.levels(); ++l) {
      detail::make_dirs(original_level_dir(out, l));
      const LevelGeometry g = geom.level(l);
      parallel_for(static_cast<std::size_t>(g.tile_count()), options.workers,
                   [&](std::size_t i) {
                     const TileAddress a{l, static_cast<int>(i) % g.cols,
                                         static_cast<int>(i) / g.cols};
                     detail::write_tile(original_tile_path(out, a), orig.tile(a),
                                        "original " + a.str());
                   });
    }
  }
  for (int k : policy.start_levels) {
    const ImportancePyramid pyr = build_sensitivity_pyramid(
        orig, profile, k, policy.drop_base, options.workers, &timings);
    ScopedStopwatch sw(&timings.file_io);
    for (int l = pyr.first_level(); l <= geom.top_level(); ++l) {
      detail::make_dirs(importance_level_dir(out, k, l));
      const LevelGeometry g = geom.level(l);
      parallel_for(static_cast<std::size_t>(g.tile_count()), options.workers,
                   [&](std::size_t i) {
                     const TileAddress a{l, static_cast<int>(i) % g.cols,
                                         static_cast<int>(i) / g.cols};
                     detail::write_tile(importance_tile_path(out, k, a),
                                        pyr.tile(a),
                                        "s" + std::to_string(k) + " " + a.str());
                   });
    }
  }
  SlideMeta& meta = result.meta;
  meta.id = options.id.empty() ? fs::weakly_canonical(out).filename().string()
                               : options.id;
  meta.width = geom.width();
  meta.height = geom.height();
  meta.tile_size = geom.tile_size();
  meta.levels = geom.levels();
  meta.stain = profile;
  meta.start_levels = policy.start_levels;
  meta.drop_base = policy.drop_base;
  meta.fade_range = options.fade_range;
  {
    ScopedStopwatch sw(&timings.file_io);
    detail::write_meta(out, meta);
  }
  timings.total = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return result;
}

/// Full pre-processing of a base raster: average pyramid plus build_all.
/// Pyramid construction is attributed to the "other" stage.
inline BuildResult preprocess_image(const RasterImage& base,
                                    const StainProfile& profile,
                                    const BuildPolicy& policy,
                                    const fs::path& out,
                                    const BuildOptions& options = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  StageTimings pre;
  std::optional<TiledPyramid> orig;
  {
    ScopedStopwatch sw(&pre.other);
    orig.emplace(build_average_pyramid(base, policy.tile_size, options.workers));
  }
  BuildResult result = build_all(*orig, profile, policy, out, options);
  result.timings.other += pre.other;
  result.timings.total = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  return result;
}

}  // namespace scalestain
