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

/// @file synth.hpp
/// @brief Deterministic synthetic slides: a (optionally textured) background
/// with stained blobs and Bernoulli noise rendered through the Beer-Lambert
/// stain model.

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "scalestain/error.hpp"
#include "scalestain/raster.hpp"
#include "scalestain/rng.hpp"
#include "scalestain/stain.hpp"

namespace scalestain {

/// Disc inscribed in the diameter x diameter square whose top-left corner
/// is (x, y).
struct Blob {
  int x = 0;
  int y = 0;
  int diameter = 1;
  double density = 1.0;
};

struct SynthSpec {
  int width = 0;
  int height = 0;
  Rgb background{255, 255, 255};
  /// Uniform per-channel jitter of the background in [-texture, texture].
  int texture = 0;
  std::vector<Blob> blobs;
  double noise_rate = 0.0;
  double noise_density = 1.0;
  std::uint64_t seed = 0;
};

inline void validate(const SynthSpec& s) {
  if (s.width < 1 || s.height < 1) {
    throw ParameterError("synthetic slide must be non-empty");
  }
  if (s.texture < 0 || s.texture > 255) {
    throw ParameterError("texture amplitude must lie in [0, 255]");
  }
  for (const Blob& b : s.blobs) {
    if (b.diameter < 1 || b.x < 0 || b.y < 0 || b.x + b.diameter > s.width ||
        b.y + b.diameter > s.height) {
      throw ParameterError("blob outside the image");
    }
    if (!(b.density >= 0.0 && b.density <= 1.0)) {
      throw ParameterError("blob density must lie in [0, 1]");
    }
  }
  if (!(s.noise_rate >= 0.0 && s.noise_rate <= 1.0) ||
      !(s.noise_density >= 0.0 && s.noise_density <= 1.0)) {
    throw ParameterError("noise rate and density must lie in [0, 1]");
  }
}

inline bool blob_covers(const Blob& b, int px, int py) {
  const double r = b.diameter / 2.0;
  const double dx = px + 0.5 - (b.x + r);
  const double dy = py + 0.5 - (b.y + r);
  return dx * dx + dy * dy <= r * r;
}

/// Per-pixel stain density (row-major); overlaps take the maximum.
inline std::vector<double> synth_density_field(const SynthSpec& spec) {
  validate(spec);
  std::vector<double> field(static_cast<std::size_t>(spec.width) * spec.height,
                            0.0);
  if (spec.noise_rate > 0.0) {
    SplitMix64 rng(spec.seed);
    for (auto& d : field) {
      if (rng.uniform() < spec.noise_rate) d = spec.noise_density;
    }
  }
  for (const Blob& b : spec.blobs) {
    for (int y = b.y; y < b.y + b.diameter; ++y) {
      for (int x = b.x; x < b.x + b.diameter; ++x) {
        if (!blob_covers(b, x, y)) continue;
        double& d = field[static_cast<std::size_t>(y) * spec.width + x];
        d = std::max(d, b.density);
      }
    }
  }
  return field;
}

inline RasterImage synthesize_slide(const SynthSpec& spec,
                                    const StainProfile& profile) {
  const std::vector<double> field = synth_density_field(spec);
  RasterImage img(spec.width, spec.height, 3);
  SplitMix64 texture_rng(trial_seed(spec.seed, 0x7e47u));
  const int span = 2 * spec.texture + 1;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      Rgb px = spec.background;
      if (spec.texture > 0) {
        for (int c = 0; c < 3; ++c) {
          const int jitter =
              static_cast<int>(texture_rng() % static_cast<unsigned>(span)) -
              spec.texture;
          px[c] = static_cast<std::uint8_t>(
              std::clamp(static_cast<int>(px[c]) + jitter, 0, 255));
        }
      }
      const double d = field[static_cast<std::size_t>(y) * spec.width + x];
      if (d > 0.0) px = synthesize_pixel(d, profile);
      img.set_rgb(x, y, px);
    }
  }
  return img;
}

}  // namespace scalestain
