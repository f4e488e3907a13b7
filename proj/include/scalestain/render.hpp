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

/// @file render.hpp
/// @brief Blending of the importance map with the original image, zoom
/// attenuation, the triangular parameter picker and the reference region
/// compositor.
///
/// The blend factor b walks three anchors: b = 0 shows the original, b = 0.5
/// shows the importance map alpha-blended on the original (alpha = density,
/// color = target), b = 1 shows the importance map alone on white. Between
/// anchors the output is linear in b.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scalestain/bundle.hpp"
#include "scalestain/error.hpp"
#include "scalestain/pyramid.hpp"
#include "scalestain/raster.hpp"

namespace scalestain {

namespace detail {

inline std::uint8_t round_channel(double v) {
  // The epsilon keeps exact .5 results from landing below after fp noise.
  return static_cast<std::uint8_t>(
      std::clamp(std::floor(v + 0.5 + 1e-9), 0.0, 255.0));
}

}  // namespace detail

/// Importance-only rendering: white at d = 0, the target color at d = 1.
inline Rgb importance_color(double d, const Rgb& target) {
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = detail::round_channel((1.0 - d) * 255.0 + d * target[c]);
  }
  return out;
}

inline Rgb blend_pixel(const Rgb& orig, double d, const Rgb& target,
                       double b_eff) {
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const double o = orig[c];
    const double overlay = d * target[c] + (1.0 - d) * o;
    double v;
    if (b_eff <= 0.5) {
      v = o + (b_eff / 0.5) * (overlay - o);
    } else {
      const double only = (1.0 - d) * 255.0 + d * target[c];
      v = overlay + ((b_eff - 0.5) / 0.5) * (only - overlay);
    }
    out[c] = detail::round_channel(v);
  }
  return out;
}

/// Blend factor after zoom attenuation: zero at the base level, reaching b
/// once the display level is `fade_range` levels above the base.
inline double effective_blend(double blend, double display_level,
                              double fade_range) {
  return blend * std::clamp(display_level / fade_range, 0.0, 1.0);
}

struct RegionRead {
  RasterImage image;
  bool interpolated = false;
};

/// Reads a region of sensitivity pyramid k at `level`. Levels below the
/// first persisted plane are nearest-neighbor upsampled from it.
inline RegionRead read_importance_region(const SlideBundle& bundle, int k,
                                         int level, int x, int y, int w, int h) {
  const DiskPyramid imp = bundle.importance(k);
  const PyramidGeometry& geom = bundle.geometry();
  if (level < 0 || level > geom.top_level()) {
    throw BoundsError("level " + std::to_string(level) + " outside pyramid");
  }
  if (level >= imp.first_level()) {
    return {read_region(imp, level, x, y, w, h), false};
  }
  const LevelGeometry g = geom.level(level);
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > g.width || y + h > g.height) {
    throw BoundsError("importance region outside level " +
                      std::to_string(level));
  }
  const int shift = imp.first_level() - level;
  const int sx0 = x >> shift;
  const int sy0 = y >> shift;
  const int sx1 = (x + w - 1) >> shift;
  const int sy1 = (y + h - 1) >> shift;
  const RasterImage src = read_region(imp, imp.first_level(), sx0, sy0,
                                      sx1 - sx0 + 1, sy1 - sy0 + 1);
  RasterImage out(w, h, 1);
  for (int j = 0; j < h; ++j) {
    const int sy = ((y + j) >> shift) - sy0;
    for (int i = 0; i < w; ++i) {
      out.at(i, j) = src.at(((x + i) >> shift) - sx0, sy);
    }
  }
  return {std::move(out), true};
}

/// One importance tile at (level, col, row); interpolated when the level is
/// not persisted for pyramid k.
inline RegionRead importance_lookup(const SlideBundle& bundle, int k,
                                    const TileAddress& a) {
  if (!bundle.meta().has_start_level(k)) {
    throw ParameterError("unknown sensitivity " + std::to_string(k));
  }
  if (!bundle.geometry().contains(a)) {
    throw BoundsError("tile " + a.str() + " outside pyramid");
  }
  const TileRect r = bundle.geometry().tile_rect(a);
  return read_importance_region(bundle, k, a.level, r.x, r.y, r.w, r.h);
}

struct Viewport {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct ViewParams {
  double display_level = 0.0;
  Viewport viewport;
  double blend = 0.0;
  int sensitivity = 0;
  double fade_range = kDefaultFadeRange;
};

/// Size of the image at a continuous display level.
inline std::pair<int, int> display_dimensions(const PyramidGeometry& geom,
                                              double level) {
  const double scale = std::exp2(level);
  return {static_cast<int>(std::ceil(geom.width() / scale)),
          static_cast<int>(std::ceil(geom.height() / scale))};
}

/// Names of the offending fields; empty when the parameters are usable.
inline std::vector<std::string> invalid_fields(const SlideBundle& bundle,
                                               const ViewParams& p) {
  std::vector<std::string> bad;
  const PyramidGeometry& geom = bundle.geometry();
  const bool level_ok = std::isfinite(p.display_level) &&
                        p.display_level >= 0.0 &&
                        p.display_level <= geom.top_level();
  if (!level_ok) bad.emplace_back("level");
  if (!(p.blend >= 0.0 && p.blend <= 1.0)) bad.emplace_back("blend");
  if (!bundle.meta().has_start_level(p.sensitivity)) bad.emplace_back("sens");
  if (!(p.fade_range > 0.0) || !std::isfinite(p.fade_range)) {
    bad.emplace_back("fade_range");
  }
  const Viewport& v = p.viewport;
  if (v.w < 1) bad.emplace_back("w");
  if (v.h < 1) bad.emplace_back("h");
  if (level_ok) {
    const auto [dw, dh] = display_dimensions(geom, p.display_level);
    if (v.x < 0 || (v.w >= 1 && static_cast<long long>(v.x) + v.w > dw)) {
      bad.emplace_back("x");
    }
    if (v.y < 0 || (v.h >= 1 && static_cast<long long>(v.y) + v.h > dh)) {
      bad.emplace_back("y");
    }
  }
  return bad;
}

namespace detail {

/// Composites the viewport against integer level n, sampling level n at the
/// centers of display pixels of the (possibly fractional) display level.
inline RasterImage composite_level(const SlideBundle& bundle,
                                   const ViewParams& p, int n) {
  const PyramidGeometry& geom = bundle.geometry();
  const LevelGeometry g = geom.level(n);
  const Viewport& v = p.viewport;
  const double scale = std::exp2(p.display_level - n);
  auto index = [&](int display, int limit) {
    const auto i = static_cast<int>(std::floor((display + 0.5) * scale));
    return std::clamp(i, 0, limit - 1);
  };
  std::vector<int> xs(v.w);
  std::vector<int> ys(v.h);
  for (int i = 0; i < v.w; ++i) xs[i] = index(v.x + i, g.width);
  for (int j = 0; j < v.h; ++j) ys[j] = index(v.y + j, g.height);
  const int x0 = xs.front();
  const int y0 = ys.front();
  const int rw = xs.back() - x0 + 1;
  const int rh = ys.back() - y0 + 1;
  const RasterImage orig = read_region(bundle.original(), n, x0, y0, rw, rh);
  const double b_eff = effective_blend(p.blend, n, p.fade_range);
  RasterImage out(v.w, v.h, 3);
  if (b_eff <= 0.0) {
    for (int j = 0; j < v.h; ++j) {
      for (int i = 0; i < v.w; ++i) {
        out.set_rgb(i, j, orig.rgb(xs[i] - x0, ys[j] - y0));
      }
    }
    return out;
  }
  const RasterImage dens =
      read_importance_region(bundle, p.sensitivity, n, x0, y0, rw, rh).image;
  const Rgb target = bundle.meta().stain.target_color;
  for (int j = 0; j < v.h; ++j) {
    for (int i = 0; i < v.w; ++i) {
      const int sx = xs[i] - x0;
      const int sy = ys[j] - y0;
      out.set_rgb(i, j, blend_pixel(orig.rgb(sx, sy), dens.at(sx, sy) / 255.0,
                                    target, b_eff));
    }
  }
  return out;
}

}  // namespace detail

/// Reference compositor for one viewport. Fractional display levels blend
/// the composites of both bracketing integer levels.
inline RasterImage render_region(const SlideBundle& bundle,
                                 const ViewParams& p) {
  const auto bad = invalid_fields(bundle, p);
  if (!bad.empty()) {
    std::string msg = "invalid view parameters:";
    for (const auto& f : bad) msg += " " + f;
    const bool only_bounds = std::all_of(bad.begin(), bad.end(), [](auto& f) {
      return f == "x" || f == "y";
    });
    if (only_bounds) throw BoundsError(msg);
    throw ParameterError(msg);
  }
  const int n0 = static_cast<int>(std::floor(p.display_level));
  const double frac = p.display_level - n0;
  RasterImage lo = detail::composite_level(bundle, p, n0);
  if (frac == 0.0) return lo;
  const RasterImage hi = detail::composite_level(bundle, p, n0 + 1);
  auto a = lo.samples();
  const auto b = hi.samples();
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = detail::round_channel(a[i] + frac * (b[i] - a[i]));
  }
  return lo;
}

// Parameter picker. The triangle has its apex at (0, 0.5) and its right
// edge from (1, 0) to (1, 1). u is the blend factor; along a vertical line
// the sensitivity runs from maximum (top edge) to minimum (bottom edge).

struct PickerPoint {
  double u = 0.0;
  double v = 0.5;
};

struct PickerParams {
  double blend = 0.0;
  int sensitivity = 0;
};

inline constexpr double kPickerTolerance = 1e-9;

inline bool inside_triangle(const PickerPoint& p) {
  return p.u >= -kPickerTolerance && p.u <= 1.0 + kPickerTolerance &&
         std::abs(p.v - 0.5) <= p.u / 2.0 + kPickerTolerance;
}

/// Nearest point of the closed triangle.
inline PickerPoint clamp_to_triangle(const PickerPoint& p) {
  if (inside_triangle(p)) return p;
  const PickerPoint corners[3] = {{0.0, 0.5}, {1.0, 0.0}, {1.0, 1.0}};
  PickerPoint best = corners[0];
  double best_d2 = INFINITY;
  for (int e = 0; e < 3; ++e) {
    const PickerPoint& a = corners[e];
    const PickerPoint& b = corners[(e + 1) % 3];
    const double du = b.u - a.u;
    const double dv = b.v - a.v;
    const double t = std::clamp(
        ((p.u - a.u) * du + (p.v - a.v) * dv) / (du * du + dv * dv), 0.0, 1.0);
    const PickerPoint q{a.u + t * du, a.v + t * dv};
    const double d2 = (q.u - p.u) * (q.u - p.u) + (q.v - p.v) * (q.v - p.v);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

/// `levels` must be ascending. At u = 0 the sensitivity has no visible
/// effect and `current` is returned unchanged.
inline PickerParams picker_to_params(const PickerPoint& p,
                                     const std::vector<int>& levels,
                                     int current) {
  if (!inside_triangle(p)) {
    throw GeometryError("picker point outside the parameter triangle");
  }
  if (levels.empty()) throw ParameterError("no sensitivity levels available");
  PickerParams out;
  out.blend = std::clamp(p.u, 0.0, 1.0);
  if (out.blend <= 0.0) {
    out.sensitivity = current;
    return out;
  }
  const double s = std::clamp(0.5 - (p.v - 0.5) / out.blend, 0.0, 1.0);
  const double pos = (1.0 - s) * static_cast<double>(levels.size() - 1);
  // Nearest level; exact ties go to the smaller start level.
  const auto idx = static_cast<std::size_t>(
      std::clamp(std::ceil(pos - 0.5), 0.0, double(levels.size() - 1)));
  out.sensitivity = levels[idx];
  return out;
}

inline PickerPoint params_to_picker(double blend, int sensitivity,
                                    const std::vector<int>& levels) {
  const auto it = std::find(levels.begin(), levels.end(), sensitivity);
  if (it == levels.end()) {
    throw ParameterError("sensitivity " + std::to_string(sensitivity) +
                         " not among the start levels");
  }
  const double u = std::clamp(blend, 0.0, 1.0);
  const double idx = static_cast<double>(it - levels.begin());
  const double s =
      levels.size() > 1 ? 1.0 - idx / static_cast<double>(levels.size() - 1)
                        : 1.0;
  return {u, 0.5 + (0.5 - s) * u};
}

}  // namespace scalestain
