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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "scalestain.hpp"
#include "test_support.hpp"

namespace ss = scalestain;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// Random 8-bit plane.
ss::RasterImage random_plane(int w, int h, std::mt19937_64& rng) {
  ss::RasterImage p(w, h, 1);
  for (auto& s : p.samples()) s = static_cast<std::uint8_t>(rng() & 0xff);
  return p;
}

// Iterated 2x2 max pooling against direct 32x32 block maxima.
Outcome block_max_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  int equal = 0;
  for (int i = 0; i < 20; ++i) {
    const ss::RasterImage plane = random_plane(1024, 1024, rng);
    ss::RasterImage it = plane;
    for (int m = 0; m < 5; ++m) it = ss::max_downsample(it);
    equal += it == ss::block_max_oracle(plane, 32);
  }
  const double t = seconds_since(t0);
  return {equal == 20 && t < 10.0,
          std::to_string(equal) + "/20 planes byte-equal, " + fmt(t, 2) + " s (< 10 s)"};
}

// Full-density implants survive to every persisted level.
Outcome r1_sensitivity() {
  const auto t0 = Clock::now();
  const std::vector<ss::StainProfile> profiles = {
      ss::hematoxylin_profile(), ss::eosin_profile(), ss::fast_red_profile()};
  long long implants = 0;
  long long checks = 0;
  long long misses = 0;
  for (int s = 0; s < 10; ++s) {
    const ss::StainProfile& p = profiles[s % profiles.size()];
    ss::SynthSpec spec;
    spec.width = 2048;
    spec.height = 2048;
    spec.background = {234, 228, 231};
    spec.texture = 6;
    spec.noise_rate = 1e-4;
    spec.seed = 1000 + s;
    const auto field = ss::synth_density_field(spec);
    const ss::TiledPyramid orig =
        ss::build_average_pyramid(ss::synthesize_slide(spec, p), 64);
    const ss::ImportancePyramid imp = ss::build_sensitivity_pyramid(orig, p, 0, true);
    const int top = orig.geometry().top_level();
    std::vector<ss::RasterImage> levels;
    for (int l = imp.first_level(); l <= top; ++l) {
      const ss::LevelGeometry g = orig.geometry().level(l);
      levels.push_back(ss::read_region(imp, l, 0, 0, g.width, g.height));
    }
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        if (field[static_cast<std::size_t>(y) * spec.width + x] < 1.0) continue;
        ++implants;
        for (int l = imp.first_level(); l <= top; ++l) {
          ++checks;
          misses += levels[l - imp.first_level()].at(x >> l, y >> l) != 255;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {misses == 0 && implants > 0 && t < 30.0,
          std::to_string(implants) + " implants, " + std::to_string(checks) +
              " representatives, " + std::to_string(misses) + " misses, " +
              fmt(t, 2) + " s (< 30 s)"};
}

// Pointwise order and aligned-region rank survive max reduction.
Outcome r2_rank() {
  std::mt19937_64 rng(77);
  long long order_violations = 0;
  long long rank_checks = 0;
  long long rank_violations = 0;
  for (int pair = 0; pair < 20; ++pair) {
    const int w = 300 + static_cast<int>(rng() % 700);
    const int h = 300 + static_cast<int>(rng() % 700);
    ss::RasterImage a = random_plane(w, h, rng);
    // Sparse planes make the rank comparisons informative.
    for (auto& s : a.samples()) s = (rng() % 50 == 0) ? s : s / 8;
    ss::RasterImage b = a;
    for (auto& s : b.samples()) {
      s = static_cast<std::uint8_t>(std::min<int>(255, s + static_cast<int>(rng() % 32)));
    }
    ss::RasterImage sa = a;
    ss::RasterImage sb = b;
    for (int m = 0; std::max(sa.width(), sa.height()) > 1; ++m) {
      for (std::size_t i = 0; i < sa.samples().size(); ++i) {
        order_violations += sa.samples()[i] > sb.samples()[i];
      }
      // Level m pixel = max of the aligned 2^m block of the base plane.
      const ss::RasterImage oracle = ss::block_max_oracle(a, 1 << m);
      for (int q = 0; q < 200; ++q) {
        const int x1 = static_cast<int>(rng() % sa.width());
        const int y1 = static_cast<int>(rng() % sa.height());
        const int x2 = static_cast<int>(rng() % sa.width());
        const int y2 = static_cast<int>(rng() % sa.height());
        const int r1 = oracle.at(x1, y1);
        const int r2 = oracle.at(x2, y2);
        const int s1 = sa.at(x1, y1);
        const int s2 = sa.at(x2, y2);
        ++rank_checks;
        rank_violations += (r1 < r2) != (s1 < s2) || (r1 == r2) != (s1 == s2);
      }
      sa = ss::max_downsample(sa);
      sb = ss::max_downsample(sb);
    }
  }
  return {order_violations == 0 && rank_violations == 0,
          "20 plane pairs, " + std::to_string(order_violations) +
              " order violations, " + std::to_string(rank_violations) + "/" +
              std::to_string(rank_checks) + " rank violations"};
}

// Closed-form contrast curves, Monte Carlo agreement and the empirical
// pipeline bridge.
Outcome expected_max_curves() {
  const auto t0 = Clock::now();
  // Monotonicity on a fine grid.
  const auto fine = ss::alpha_grid(101);
  int monotone_violations = 0;
  for (int m = 0; m <= 4; ++m) {
    for (std::size_t i = 1; i < fine.size(); ++i) {
      monotone_violations += ss::expected_max_bernoulli(fine[i], m) <
                             ss::expected_max_bernoulli(fine[i - 1], m);
      if (m > 0) {
        monotone_violations += ss::expected_max_bernoulli(fine[i], m) <
                               ss::expected_max_bernoulli(fine[i], m - 1);
      }
    }
  }
  // Monte Carlo, 10^6 trials at 21 grid points per curve.
  const long long trials = 1000000;
  const auto grid = ss::alpha_grid(21);
  int mc_fail = 0;
  int mc_points = 0;
  double worst_z = 0.0;
  for (int m = 0; m <= 4; ++m) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const ss::PoolingModel model{grid[i], m, trials,
                                   42 + 1000ULL * m + i};
      const ss::McEstimate mc = ss::expected_max_mc(model);
      const double exact = ss::expected_max_bernoulli(grid[i], m);
      const double err = std::abs(mc.estimate - exact);
      const double tol = std::max(3.0 * mc.standard_error, 1.0 / trials);
      ++mc_points;
      mc_fail += err > tol;
      if (mc.standard_error > 0) worst_z = std::max(worst_z, err / mc.standard_error);
    }
  }
  // Bridge: i.i.d. full-density pixels through the real pipeline.
  int bridge_fail = 0;
  int bridge_points = 0;
  std::string bridge;
  const ss::StainProfile p = ss::hematoxylin_profile();
  for (double alpha : {0.001, 0.01, 0.05}) {
    ss::SynthSpec spec;
    spec.width = 2048;
    spec.height = 2048;
    spec.background = {236, 230, 233};
    spec.texture = 5;
    spec.noise_rate = alpha;
    spec.seed = static_cast<std::uint64_t>(alpha * 1e6);
    const ss::TiledPyramid orig =
        ss::build_average_pyramid(ss::synthesize_slide(spec, p), 256);
    const ss::ImportancePyramid imp = ss::build_sensitivity_pyramid(orig, p, 0, false);
    for (int m = 1; m <= 3; ++m) {
      const ss::LevelGeometry g = orig.geometry().level(m);
      const ss::RasterImage plane = ss::read_region(imp, m, 0, 0, g.width, g.height);
      long long hit = 0;
      for (auto s : plane.samples()) hit += s > 127;
      const double n = static_cast<double>(plane.samples().size());
      const double frac = static_cast<double>(hit) / n;
      const double exact = ss::expected_max_bernoulli(alpha, m);
      const double sigma = std::sqrt(exact * (1 - exact) / n);
      ++bridge_points;
      const bool ok = std::abs(frac - exact) <= std::max(3.0 * sigma, 1.0 / n);
      bridge_fail += !ok;
      bridge += " a=" + fmt(alpha, 3) + "/m=" + std::to_string(m) + ":" +
                fmt(frac, 4) + "~" + fmt(exact, 4);
    }
  }
  const double t = seconds_since(t0);
  return {monotone_violations == 0 && mc_fail == 0 && bridge_fail == 0 && t < 60.0,
          std::to_string(monotone_violations) + " monotonicity violations; MC " +
              std::to_string(mc_points - mc_fail) + "/" + std::to_string(mc_points) +
              " within 3 sigma (worst z " + fmt(worst_z, 2) + "); bridge " +
              std::to_string(bridge_points - bridge_fail) + "/" +
              std::to_string(bridge_points) + ";" + bridge + "; " + fmt(t, 2) +
              " s (< 60 s)"};
}

Outcome deconvolution_round_trip() {
  double worst = 0.0;
  std::string worst_name;
  for (const auto& p : ss::default_profiles()) {
    for (int i = 0; i <= 20; ++i) {
      const double d = i / 20.0;
      const double err = std::abs(ss::density(ss::synthesize_pixel(d, p), p) - d);
      if (err > worst) {
        worst = err;
        worst_name = p.name;
      }
    }
  }
  return {worst <= 2.0 / 255.0, "worst error " + fmt(worst, 5) + " (" + worst_name +
                                    ") <= " + fmt(2.0 / 255.0, 5)};
}

long long brute_force_level_tiles(long long w, long long h, int ts, int level) {
  for (int i = 0; i < level; ++i) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  long long n = 0;
  for (long long y = 0; y < h; y += ts) {
    for (long long x = 0; x < w; x += ts) ++n;
  }
  return n;
}

Outcome tile_accounting() {
  std::mt19937_64 rng(4242);
  int match = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 60000);
    const int h = 1 + static_cast<int>(rng() % 60000);
    const int ts = 128 << (rng() % 3);
    const ss::PyramidGeometry g(w, h, ts);
    std::vector<int> ks;
    for (int k = 0; k <= g.top_level(); ++k) {
      if (rng() % 3 != 0) ks.push_back(k);
    }
    const bool drop = rng() % 2 == 0;
    // Brute force: find the top level by halving until one tile fits.
    int top = 0;
    while (brute_force_level_tiles(w, h, ts, top) > 1) ++top;
    long long orig = 0;
    for (int l = 0; l <= top; ++l) orig += brute_force_level_tiles(w, h, ts, l);
    long long sens = 0;
    for (int k : ks) {
      for (int l = (drop && k < top) ? k + 1 : k; l <= top; ++l) {
        sens += brute_force_level_tiles(w, h, ts, l);
      }
    }
    const ss::TileBudget b = ss::tile_accounting(w, h, ts, ks, drop);
    match += b.original_tiles == orig && b.sensitivity_tiles == sens;
  }
  const std::vector<int> ks{1, 2, 3, 4, 5, 6};
  const ss::TileBudget keep = ss::tile_accounting(16384, 16384, 256, ks, false);
  const ss::TileBudget drop = ss::tile_accounting(16384, 16384, 256, ks, true);
  const double factor = static_cast<double>(keep.sensitivity_tiles) /
                        static_cast<double>(drop.sensitivity_tiles);
  const bool factor_ok = factor >= 3.5 && factor <= 4.0;
  return {match == 50 && factor_ok,
          std::to_string(match) + "/50 geometries match brute force; 16384^2/256, "
          "start levels 1..6: original " + std::to_string(keep.original_tiles) +
              " tiles, sensitivity keep-base " + std::to_string(keep.sensitivity_tiles) +
              " (ratio " + fmt(keep.overhead_ratio, 4) + "), drop-base " +
              std::to_string(drop.sensitivity_tiles) + " (ratio " +
              fmt(drop.overhead_ratio, 4) + "); drop-base factor " + fmt(factor, 4) +
              (factor_ok ? " in" : " outside") + " [3.5, 4.0]"};
}

// Shared bundle for the rendering and server criteria.
struct Fixture {
  ss::testing::TempDir dir{"acceptance"};
  fs::path root = dir.path() / "root";
  fs::path slide = root / "slide";
  ss::RasterImage base;

  Fixture() {
    ss::SynthSpec spec;
    spec.width = 1100;
    spec.height = 900;
    spec.background = {230, 224, 229};
    spec.texture = 7;
    spec.noise_rate = 0.0005;
    spec.blobs = {{100, 120, 20, 1.0}, {700, 500, 6, 1.0}, {420, 800, 40, 0.7}};
    spec.seed = 99;
    base = ss::synthesize_slide(spec, ss::hematoxylin_profile());
    ss::BuildOptions opts;
    opts.id = "slide";
    ss::preprocess_image(base, ss::hematoxylin_profile(),
                         ss::BuildPolicy{{0, 1, 2, 3}, true, 128}, slide, opts);
  }
};

Outcome rendering_anchors(const Fixture& fx) {
  const ss::SlideBundle b = ss::SlideBundle::load(fx.slide);
  const ss::Rgb t = b.meta().stain.target_color;
  std::mt19937_64 rng(5);
  int zero_blend_bad = 0, zero_blend_runs = 0;
  for (int level = 0; level < b.geometry().levels(); ++level) {
    const ss::LevelGeometry g = b.geometry().level(level);
    for (int r = 0; r < 5; ++r) {
      const int w = 1 + static_cast<int>(rng() % g.width);
      const int h = 1 + static_cast<int>(rng() % g.height);
      const int x = static_cast<int>(rng() % (g.width - w + 1));
      const int y = static_cast<int>(rng() % (g.height - h + 1));
      const int k = b.meta().start_levels[rng() % b.meta().start_levels.size()];
      ++zero_blend_runs;
      zero_blend_bad += ss::render_region(b, {double(level), {x, y, w, h}, 0.0, k, 2.0}) !=
                        ss::read_region(b.original(), level, x, y, w, h);
    }
  }
  // b = 0.5 above the fade range: full-density pixels render as T.
  int full_pixels = 0, full_bad = 0;
  for (int k : b.meta().start_levels) {
    for (int level = std::max(2, k); level < b.geometry().levels(); ++level) {
      const ss::LevelGeometry g = b.geometry().level(level);
      const ss::RasterImage out =
          ss::render_region(b, {double(level), {0, 0, g.width, g.height}, 0.5, k, 2.0});
      const ss::RasterImage d =
          ss::read_importance_region(b, k, level, 0, 0, g.width, g.height).image;
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
          if (d.at(x, y) != 255) continue;
          ++full_pixels;
          full_bad += out.rgb(x, y) != t;
        }
      }
    }
  }
  // Level 0 shows the original for every parameter setting.
  int base_bad = 0, base_runs = 0;
  const ss::Viewport all{0, 0, fx.base.width(), fx.base.height()};
  for (double blend : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    for (int k : b.meta().start_levels) {
      for (double f : {0.25, 1.0, 2.0, 8.0}) {
        ++base_runs;
        base_bad += ss::render_region(b, {0.0, all, blend, k, f}) != fx.base;
      }
    }
  }
  return {zero_blend_bad == 0 && full_pixels > 0 && full_bad == 0 && base_bad == 0,
          "b=0: " + std::to_string(zero_blend_runs - zero_blend_bad) + "/" +
              std::to_string(zero_blend_runs) + " byte-equal; b=0.5,d=1: " +
              std::to_string(full_pixels - full_bad) + "/" +
              std::to_string(full_pixels) + " pixels equal T; l=0: " +
              std::to_string(base_runs - base_bad) + "/" + std::to_string(base_runs) +
              " renders equal the original"};
}

// Sparse 2x2 blobs vanish under averaging but stay visible in the overlay.
Outcome visibility() {
  const auto t0 = Clock::now();
  ss::testing::TempDir dir("visibility");
  const ss::StainProfile p = ss::dab_profile();
  ss::SynthSpec spec;
  spec.width = 4096;
  spec.height = 4096;
  spec.background = {226, 221, 228};
  spec.texture = 8;
  spec.seed = 11;
  std::mt19937_64 rng(12);
  std::set<std::pair<int, int>> sites;  // level-5 cells holding a blob
  while (spec.blobs.size() < 150) {
    // Even offsets keep each blob one full pixel at level 1.
    const int x = 2 * static_cast<int>(rng() % (spec.width / 2 - 1));
    const int y = 2 * static_cast<int>(rng() % (spec.height / 2 - 1));
    if (!sites.insert({x >> 5, y >> 5}).second) continue;
    spec.blobs.push_back({x, y, 2, 1.0});
  }
  ss::BuildOptions opts;
  opts.id = "vis";
  ss::preprocess_image(ss::synthesize_slide(spec, p), p,
                       ss::BuildPolicy{{1}, true, 128}, dir.path() / "vis", opts);
  const ss::SlideBundle b = ss::SlideBundle::load(dir.path() / "vis");
  const int level = 5;
  const ss::LevelGeometry g = b.geometry().level(level);
  const ss::RasterImage avg = ss::read_region(b.original(), level, 0, 0, g.width, g.height);
  double bg[3] = {0, 0, 0};
  long long bg_n = 0;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (sites.count({x, y})) continue;
      for (int c = 0; c < 3; ++c) bg[c] += avg.at(x, y, c);
      ++bg_n;
    }
  }
  for (double& c : bg) c /= static_cast<double>(bg_n);
  const ss::RasterImage overlay = ss::render_region(
      b, {double(level), {0, 0, g.width, g.height}, 0.5, 1, b.meta().fade_range});
  double worst_avg = 0.0;
  double worst_overlay = 0.0;
  for (const auto& [x, y] : sites) {
    for (int c = 0; c < 3; ++c) {
      worst_avg = std::max(worst_avg, std::abs(avg.at(x, y, c) - bg[c]));
      worst_overlay = std::max(
          worst_overlay, std::abs(double(overlay.at(x, y, c)) - p.target_color[c]));
    }
  }
  const double t = seconds_since(t0);
  return {worst_avg < 4.0 && worst_overlay <= 8.0 && t < 20.0,
          std::to_string(sites.size()) + " blobs; averaged level 5 max deviation " +
              fmt(worst_avg, 2) + "/255 (< 4); overlay k=1 b=0.5 max distance to T " +
              fmt(worst_overlay, 2) + "/255 (<= 8); " + fmt(t, 2) + " s (< 20 s)"};
}

// 64-Mpixel preprocess, stage breakdown and worker-count determinism.
Outcome throughput() {
  ss::testing::TempDir dir("throughput");
  const ss::StainProfile p = ss::dab_profile();
  ss::SynthSpec spec;
  spec.width = 8192;
  spec.height = 8192;
  spec.background = {232, 226, 230};
  spec.texture = 6;
  spec.noise_rate = 1e-4;
  spec.seed = 64;
  const fs::path input = dir.path() / "input.png";
  ss::save_png(input, ss::synthesize_slide(spec, p));
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  auto run = [&](const fs::path& out, int workers) {
    const auto t0 = Clock::now();
    ss::StageTimings io;
    ss::RasterImage base;
    {
      ss::ScopedStopwatch sw(&io.file_io);
      base = ss::load_png(input);
    }
    ss::BuildOptions opts;
    opts.id = "big";
    opts.workers = workers;
    const ss::PyramidGeometry geom(base.width(), base.height(), 256);
    ss::BuildResult r = ss::preprocess_image(base, p, ss::default_policy(geom), out, opts);
    r.timings.file_io += io.file_io;
    r.timings.total = seconds_since(t0);
    return r.timings;
  };
  const ss::StageTimings many = run(dir.path() / "many", static_cast<int>(std::max(4u, cores)));
  const ss::StageTimings one = run(dir.path() / "one", 1);
  long long files = 0;
  long long differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "many")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), dir.path() / "many");
    differing += ss::read_file(e.path()) != ss::read_file(dir.path() / "one" / rel);
  }
  long long files_one = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "one")) {
    files_one += e.is_regular_file();
  }
  const ss::StageTimings& t = many;
  std::ostringstream os;
  os << "64 Mpixel on " << cores << " core(s): " << fmt(t.total, 2)
     << " s (< 60 s) [file I/O " << fmt(t.file_io, 2) << ", deconvolution "
     << fmt(t.deconvolution, 2) << ", max-subsample " << fmt(t.max_subsample, 2)
     << ", other " << fmt(t.other, 2) << "], " << fmt(8192.0 * 8192.0 / 1e6 / t.total, 2)
     << " Mpixel/s; 1 worker " << fmt(one.total, 2) << " s; " << files
     << " files, " << differing << " differ between 1 and N workers";
  return {t.total < 60.0 && differing == 0 && files == files_one && files > 0, os.str()};
}

Outcome server_contract(const Fixture& fx) {
  ss::TileServer server(fx.root, nullptr);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cl("127.0.0.1", port);
  cl.set_read_timeout(60, 0);
  const ss::SlideBundle& b = *server.registry().find("slide");
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int render_ok = 0;
  for (int i = 0; i < 100; ++i) {
    ss::ViewParams p;
    p.display_level = std::round(unit(rng) * b.geometry().top_level() * 100.0) / 100.0;
    const auto [dw, dh] = ss::display_dimensions(b.geometry(), p.display_level);
    p.viewport.w = 1 + static_cast<int>(rng() % std::min(dw, 256));
    p.viewport.h = 1 + static_cast<int>(rng() % std::min(dh, 256));
    p.viewport.x = static_cast<int>(rng() % (dw - p.viewport.w + 1));
    p.viewport.y = static_cast<int>(rng() % (dh - p.viewport.h + 1));
    p.blend = std::round(unit(rng) * 100.0) / 100.0;
    p.sensitivity = b.meta().start_levels[rng() % b.meta().start_levels.size()];
    p.fade_range = b.meta().fade_range;
    std::ostringstream q;
    q << "/api/slides/slide/render?level=" << p.display_level << "&x=" << p.viewport.x
      << "&y=" << p.viewport.y << "&w=" << p.viewport.w << "&h=" << p.viewport.h
      << "&blend=" << p.blend << "&sens=" << p.sensitivity;
    auto res = cl.Get(q.str());
    if (!res || res->status != 200) continue;
    const auto expect = ss::encode_png(ss::render_region(b, p));
    render_ok += std::string(expect.begin(), expect.end()) == res->body;
  }
  int interp_tiles = 0;
  int interp_ok = 0;
  for (int k : b.meta().start_levels) {
    const ss::DiskPyramid imp = b.importance(k);
    const int first = imp.first_level();
    const ss::LevelGeometry gf = b.geometry().level(first);
    const ss::RasterImage src = ss::read_region(imp, first, 0, 0, gf.width, gf.height);
    for (int level = 0; level < first; ++level) {
      const ss::LevelGeometry g = b.geometry().level(level);
      for (int row = 0; row < g.rows; ++row) {
        for (int col = 0; col < g.cols; ++col) {
          ++interp_tiles;
          auto res = cl.Get("/api/slides/slide/tiles/importance/" + std::to_string(k) +
                            "/" + std::to_string(level) + "/" + std::to_string(col) +
                            "/" + std::to_string(row));
          if (!res || res->status != 200 ||
              res->get_header_value("X-Interpolated") != "true") {
            continue;
          }
          const ss::RasterImage got = ss::decode_png(
              std::vector<std::uint8_t>(res->body.begin(), res->body.end()));
          const ss::TileRect r = b.geometry().tile_rect({level, col, row});
          bool same = got.width() == r.w && got.height() == r.h;
          const int shift = first - level;
          for (int y = 0; same && y < r.h; ++y) {
            for (int x = 0; same && x < r.w; ++x) {
              same = got.at(x, y) == src.at((r.x + x) >> shift, (r.y + y) >> shift);
            }
          }
          interp_ok += same;
        }
      }
    }
  }
  server.stop();
  th.join();
  return {render_ok == 100 && interp_tiles > 0 && interp_ok == interp_tiles,
          std::to_string(render_ok) + "/100 renders byte-equal; " +
              std::to_string(interp_ok) + "/" + std::to_string(interp_tiles) +
              " dropped-level tiles flagged and equal to the nearest-neighbor oracle"};
}

std::string letters(const ss::ActivityTimeline& tl) {
  std::string s;
  for (ss::Activity a : tl.seconds) {
    switch (a) {
      case ss::Activity::kParameterAdjust: s += 'A'; break;
      case ss::Activity::kPan: s += 'P'; break;
      case ss::Activity::kZoom: s += 'Z'; break;
      case ss::Activity::kDwell: s += 'D'; break;
    }
  }
  return s;
}

Outcome session_analytics() {
  struct Case {
    const char* file;
    std::string labels;
    std::map<int, double> histogram;
  };
  auto rep = [](char c, int n) { return std::string(static_cast<std::size_t>(n), c); };
  std::string alternating;
  for (int s = 0; s < 60; ++s) alternating += s == 30 ? 'Z' : (s % 2 == 0 ? 'P' : 'D');
  const std::vector<Case> cases = {
      {"session_mixed.jsonl",
       rep('D', 5) + rep('P', 7) + rep('Z', 8) + rep('A', 10) + rep('D', 10) + "AZAZ" +
           rep('P', 11) + rep('D', 5),
       {{1, 16.0}, {2, 26.0}, {3, 2.0}, {4, 2.0}, {5, 2.0}, {6, 12.0}}},
      {"session_two_levels.jsonl", alternating, {{2, 30.0}, {5, 30.0}}},
      {"session_pan_then_idle.jsonl", "PPPP" + rep('D', 56), {{3, 60.0}}},
  };
  int ok = 0;
  std::string detail;
  for (const Case& c : cases) {
    std::ifstream in(std::string(SCALESTAIN_FIXTURES) + "/" + c.file);
    const ss::ParsedLog log = ss::parse_log(in);
    const ss::SessionReport r = ss::analyze_session(log.events);
    double total = 0.0;
    bool bins_ok = true;
    for (const auto& [level, sec] : c.histogram) {
      const auto it = r.zoom_histogram.find(level);
      bins_ok = bins_ok && it != r.zoom_histogram.end() && std::abs(it->second - sec) <= 1.0;
    }
    for (const auto& [level, sec] : r.zoom_histogram) total += sec;
    const double duration = (log.events.back().t - log.events.front().t) / 1000.0;
    const bool labels_ok = letters(r.timeline) == c.labels;
    const bool conserved = std::abs(total - duration) <= 1.0;
    const bool pass = log.errors.empty() && labels_ok && bins_ok && conserved &&
                      r.zoom_histogram.size() == c.histogram.size();
    ok += pass;
    detail += std::string(" ") + c.file + (pass ? " ok" : " MISMATCH");
  }
  return {ok == static_cast<int>(cases.size()),
          std::to_string(ok) + "/" + std::to_string(cases.size()) +
              " fixtures reproduce labels and histograms;" + detail};
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << '\n';
  };
  report("block-max-oracle-equivalence", block_max_equivalence);
  report("r1-sensitivity", r1_sensitivity);
  report("r2-rank-preservation", r2_rank);
  report("expected-max-contrast-curves", expected_max_curves);
  report("deconvolution-round-trip", deconvolution_round_trip);
  report("tile-accounting", tile_accounting);
  std::unique_ptr<Fixture> fx;
  try {
    fx = std::make_unique<Fixture>();
  } catch (const std::exception& e) {
    std::cout << "fixture build failed: " << e.what() << '\n';
  }
  report("rendering-anchors-and-zoom-law", [&] {
    return fx ? rendering_anchors(*fx) : Outcome{false, "no fixture"};
  });
  report("end-to-end-visibility", visibility);
  report("throughput", throughput);
  report("server-contract", [&] {
    return fx ? server_contract(*fx) : Outcome{false, "no fixture"};
  });
  report("session-analytics", session_analytics);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) +
                                                             " criterion(s) failed")
            << '\n';
  return failures == 0 ? 0 : 1;
}
