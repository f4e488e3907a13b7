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

/// @file stain.hpp
/// @brief Single-stain color deconvolution.
///
/// Each pixel is converted to optical density (Lambert-Beer) and projected on
/// the unit optical-density vector of a reference stain. The projection,
/// divided by the profile's density cap and clamped, is the normalized stain
/// density d in [0, 1]. synthesize_pixel() is the inverse model and is used to
/// build fixtures with a known density.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalestain/error.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/raster.hpp"

namespace scalestain {

using Vec3 = std::array<double, 3>;

struct StainProfile {
  std::string name;
  Vec3 od_vector{1.0, 0.0, 0.0};
  Rgb target_color{0, 0, 0};
  Rgb background_color{255, 255, 255};
  /// Incident intensity per channel. Defaults to pure white.
  Rgb i0{255, 255, 255};
  double d_max = 1.0;

  friend bool operator==(const StainProfile&, const StainProfile&) = default;
};

inline double norm(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline void validate(const StainProfile& p) {
  if (std::abs(norm(p.od_vector) - 1.0) > 1e-6) {
    throw ParameterError("stain '" + p.name + "': od_vector is not unit length");
  }
  for (double c : p.od_vector) {
    if (!(c >= 0.0)) {
      throw ParameterError("stain '" + p.name +
                           "': od_vector components must be >= 0");
    }
  }
  if (!(p.d_max > 0.0) || !std::isfinite(p.d_max)) {
    throw ParameterError("stain '" + p.name + "': d_max must be positive");
  }
  for (auto c : p.i0) {
    if (c < 1) throw ParameterError("stain '" + p.name + "': i0 must be >= 1");
  }
}

inline Vec3 rgb_to_od(const Rgb& pixel, const Rgb& i0 = {255, 255, 255}) {
  Vec3 od{};
  for (int c = 0; c < 3; ++c) {
    const double v = std::max<int>(pixel[c], 1);
    od[c] = -std::log10(v / i0[c]);
  }
  return od;
}

namespace detail {

inline double clamp_density(double projected, double d_max) {
  return std::clamp(projected / d_max, 0.0, 1.0);
}

inline std::uint8_t quantize_unit(double d) {
  return static_cast<std::uint8_t>(std::floor(255.0 * d + 0.5));
}

}  // namespace detail

/// Normalized stain density of one pixel.
inline double density(const Rgb& pixel, const StainProfile& profile) {
  const Vec3 od = rgb_to_od(pixel, profile.i0);
  const Vec3& s = profile.od_vector;
  const double projected = od[0] * s[0] + od[1] * s[1] + od[2] * s[2];
  return detail::clamp_density(projected, profile.d_max);
}

/// Density plane (1 channel, value/255 = d) of an RGB raster.
inline RasterImage density_map(const RasterImage& img,
                               const StainProfile& profile) {
  if (img.channels() != 3) throw ParameterError("density_map needs RGB input");
  // Per-channel weighted OD tables; the sum is evaluated in the same order as
  // density(), so results are bit-identical to the per-pixel path.
  std::array<std::array<double, 256>, 3> weighted{};
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) {
      Rgb px{255, 255, 255};
      px[c] = static_cast<std::uint8_t>(v);
      weighted[c][v] = rgb_to_od(px, profile.i0)[c] * profile.od_vector[c];
    }
  }
  RasterImage out(img.width(), img.height(), 1);
  const auto src = img.samples();
  auto dst = out.samples();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double projected = weighted[0][src[3 * i]] +
                             weighted[1][src[3 * i + 1]] +
                             weighted[2][src[3 * i + 2]];
    dst[i] = detail::quantize_unit(
        detail::clamp_density(projected, profile.d_max));
  }
  return out;
}

/// Beer-Lambert synthesis: the RGB a pixel takes at density d.
inline Rgb synthesize_pixel(double d, const StainProfile& profile) {
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const double v = profile.i0[c] *
                     std::pow(10.0, -d * profile.d_max * profile.od_vector[c]);
    out[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  return out;
}

/// Builds a profile from a raw OD vector. The target color is the stain's own
/// appearance at full density.
inline StainProfile make_profile(std::string name, Vec3 od, double d_max = 1.0) {
  const double n = norm(od);
  if (!(n > 0.0)) throw ParameterError("od_vector must be non-zero");
  for (double& c : od) c /= n;
  StainProfile p;
  p.name = std::move(name);
  p.od_vector = od;
  p.d_max = d_max;
  p.target_color = synthesize_pixel(1.0, p);
  return p;
}

// Reference OD vectors from the Ruifrok & Johnston color-deconvolution
// tables (ImageJ "Colour Deconvolution" presets).
inline StainProfile hematoxylin_profile() {
  return make_profile("hematoxylin", {0.644211, 0.716556, 0.266844});
}
inline StainProfile eosin_profile() {
  return make_profile("eosin", {0.092789, 0.954111, 0.283111});
}
inline StainProfile dab_profile() {
  return make_profile("dab", {0.268, 0.570, 0.776});
}
inline StainProfile fast_red_profile() {
  return make_profile("fast-red", {0.21393921, 0.85112669, 0.47794022});
}

inline std::vector<StainProfile> default_profiles() {
  return {hematoxylin_profile(), eosin_profile(), dab_profile(),
          fast_red_profile()};
}

/// Looks up a built-in profile by name; throws ParameterError if unknown.
inline StainProfile builtin_profile(const std::string& name) {
  for (auto& p : default_profiles()) {
    if (p.name == name) return p;
  }
  throw ParameterError("unknown stain profile '" + name + "'");
}

namespace detail {

inline Rgb rgb_from_json(const nlohmann::json& j, const char* key) {
  const auto v = j.get<std::array<int, 3>>();
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    if (v[c] < 0 || v[c] > 255) {
      throw ParameterError(std::string(key) + " components must be in [0, 255]");
    }
    out[c] = static_cast<std::uint8_t>(v[c]);
  }
  return out;
}

}  // namespace detail

// JSON: { "name", "od_vector": [r,g,b], "target_color": [r,g,b],
//         "background_color": [r,g,b], "d_max", optional "i0": [r,g,b] }
inline void to_json(nlohmann::json& j, const StainProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"od_vector", p.od_vector},
                     {"target_color", p.target_color},
                     {"background_color", p.background_color},
                     {"d_max", p.d_max},
                     {"i0", p.i0}};
}

/// od_vector is normalized on load, so published unnormalized tables work.
inline void from_json(const nlohmann::json& j, StainProfile& p) {
  try {
    p.name = j.at("name").get<std::string>();
    Vec3 od = j.at("od_vector").get<Vec3>();
    const double n = norm(od);
    if (!(n > 0.0)) throw ParameterError("od_vector must be non-zero");
    // Leave unit vectors untouched so profiles round-trip bit-exactly.
    if (std::abs(n - 1.0) > 1e-12) {
      for (double& c : od) c /= n;
    }
    p.od_vector = od;
    p.target_color = detail::rgb_from_json(j.at("target_color"), "target_color");
    p.background_color =
        j.contains("background_color")
            ? detail::rgb_from_json(j.at("background_color"), "background_color")
            : Rgb{255, 255, 255};
    p.d_max = j.value("d_max", 1.0);
    p.i0 = j.contains("i0") ? detail::rgb_from_json(j.at("i0"), "i0")
                            : Rgb{255, 255, 255};
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("invalid stain profile: ") + e.what());
  }
  validate(p);
}

inline StainProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stain profile " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
  return j.get<StainProfile>();
}

}  // namespace scalestain
