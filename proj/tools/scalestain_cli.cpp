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

// scalestain: command-line entry points.
//
//   synth        write a deterministic synthetic slide image
//   preprocess   build the original and sensitivity pyramids of an image
//   render       composite a view of a slide bundle into a PNG
//   stats        tile and byte budget of a slide bundle
//   serve        HTTP tile server over a directory of bundles
//   analyze-log  behavioral summary of a session log
//   curve        expected-max contrast curves as CSV
//
// Exit codes: 0 success, 2 usage, 1 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scalestain.hpp"

namespace {

using namespace scalestain;
using nlohmann::json;

/// Bad command-line input that CLI11 cannot detect on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid integer '" + s + "' in " + what);
  }
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + s + "' in " + what);
  }
}

Rgb parse_rgb(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw UsageError("expected r,g,b but got '" + s + "'");
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const int v = to_int(parts[c], "color");
    if (v < 0 || v > 255) throw UsageError("color component out of range");
    out[c] = static_cast<std::uint8_t>(v);
  }
  return out;
}

/// A profile JSON file, or the name of a built-in profile.
StainProfile resolve_stain(const std::string& arg) {
  if (fs::exists(arg)) return load_profile(arg);
  try {
    return builtin_profile(arg);
  } catch (const ParameterError&) {
    throw UsageError("stain '" + arg +
                     "' is neither a profile file nor one of: hematoxylin, "
                     "eosin, dab, fast-red");
  }
}

/// "a..b" or "a,b,c".
std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int a = to_int(s.substr(0, dots), "--start-levels");
    const int b = to_int(s.substr(dots + 2), "--start-levels");
    if (b < a) throw UsageError("empty --start-levels range");
    for (int k = a; k <= b; ++k) out.push_back(k);
    return out;
  }
  for (const auto& part : split(s, ',')) {
    out.push_back(to_int(part, "--start-levels"));
  }
  return out;
}

std::string percent(double part, double total) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1)
     << (total > 0.0 ? 100.0 * part / total : 0.0) << '%';
  return os.str();
}

json timings_json(const StageTimings& t) {
  return {{"file_io_s", t.file_io},
          {"deconvolution_s", t.deconvolution},
          {"max_subsample_s", t.max_subsample},
          {"other_s", t.other},
          {"total_s", t.total},
          {"pixels_processed", t.pixels_processed},
          {"mpixel_per_s", t.megapixels_per_second()}};
}

void print_timings(std::ostream& os, const StageTimings& t) {
  os << std::fixed << std::setprecision(3);
  os << "stage            seconds    share\n";
  auto row = [&](const char* name, double v) {
    os << std::left << std::setw(16) << name << std::right << std::setw(8) << v
       << std::setw(9) << percent(v, t.total) << '\n';
  };
  row("file I/O", t.file_io);
  row("deconvolution", t.deconvolution);
  row("max-subsample", t.max_subsample);
  row("other", t.other);
  row("total", t.total);
  os << "pixels processed: " << t.pixels_processed << " ("
     << std::setprecision(2) << t.megapixels_per_second() << " Mpixel/s)\n";
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int width = 0;
  int height = 0;
  std::string background = "255,255,255";
  int texture = 0;
  std::vector<std::string> blobs;
  double noise_rate = 0.0;
  double noise_density = 1.0;
  std::uint64_t seed = 0;
  std::string stain = "hematoxylin";
  std::string out;
};

int run_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.width = a.width;
  spec.height = a.height;
  spec.background = parse_rgb(a.background);
  spec.texture = a.texture;
  spec.noise_rate = a.noise_rate;
  spec.noise_density = a.noise_density;
  spec.seed = a.seed;
  for (const auto& b : a.blobs) {
    const auto p = split(b, ',');
    if (p.size() != 4) throw UsageError("--blob expects x,y,diameter,density");
    spec.blobs.push_back({to_int(p[0], "--blob"), to_int(p[1], "--blob"),
                          to_int(p[2], "--blob"), to_double(p[3], "--blob")});
  }
  const StainProfile profile = resolve_stain(a.stain);
  try {
    validate(spec);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  save_png(a.out, synthesize_slide(spec, profile));
  return 0;
}

// ----------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string input;
  std::string out;
  std::string stain;
  std::string start_levels;
  bool no_drop_base = false;
  int tile_size = kDefaultTileSize;
  int workers = 0;
  bool force = false;
  std::string id;
  double fade_range = kDefaultFadeRange;
  bool json_out = false;
};

int run_preprocess(const PreprocessArgs& a) {
  const StainProfile profile = resolve_stain(a.stain);
  if (a.tile_size < 1) throw UsageError("--tile-size must be positive");
  const fs::path out = a.out;
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!a.force) {
      std::cerr << "error: " << out.string()
                << " exists and is not empty; pass --force to overwrite\n";
      return 1;
    }
    fs::remove(meta_path(out));
    fs::remove_all(out / "original");
    fs::remove_all(out / "importance");
  }
  StageTimings input_io;
  RasterImage base;
  {
    ScopedStopwatch sw(&input_io.file_io);
    base = load_png(a.input);
  }
  if (base.channels() != 3) throw UsageError("input image must be RGB");
  const PyramidGeometry geom(base.width(), base.height(), a.tile_size);
  BuildPolicy policy = default_policy(geom);
  policy.drop_base = !a.no_drop_base;
  if (!a.start_levels.empty()) policy.start_levels = parse_levels(a.start_levels);
  try {
    normalize_policy(policy, geom);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  BuildOptions options;
  options.id = a.id;
  options.workers = a.workers;
  options.fade_range = a.fade_range;
  BuildResult result = preprocess_image(base, profile, policy, out, options);
  result.timings.file_io += input_io.file_io;
  result.timings.total += input_io.file_io;
  const TileBudget budget = tile_accounting(geom.width(), geom.height(), policy);
  const double slide_rate =
      result.timings.total > 0.0
          ? static_cast<double>(base.pixel_count()) / 1e6 / result.timings.total
          : 0.0;
  if (a.json_out) {
    json j{{"id", result.meta.id},
           {"levels", result.meta.levels},
           {"start_levels", result.meta.start_levels},
           {"original_tiles", budget.original_tiles},
           {"sensitivity_tiles", budget.sensitivity_tiles},
           {"timings", timings_json(result.timings)},
           {"slide_mpixel_per_s", slide_rate}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "slide " << result.meta.id << ": " << geom.width() << "x"
              << geom.height() << ", " << geom.levels() << " levels, "
              << budget.original_tiles << " original tiles, "
              << budget.sensitivity_tiles << " sensitivity tiles\n";
    print_timings(std::cout, result.timings);
    std::cout << "slide throughput: " << std::setprecision(2) << slide_rate
              << " Mpixel/s of base image\n";
  }
  return 0;
}

// --------------------------------------------------------------- render

struct RenderArgs {
  std::string slide;
  double level = 0.0;
  double blend = 0.0;
  int sens = 0;
  std::string viewport;
  double fade = -1.0;
  std::string out;
};

int run_render(const RenderArgs& a) {
  const SlideBundle bundle = SlideBundle::load(a.slide);
  ViewParams p;
  p.display_level = a.level;
  p.blend = a.blend;
  p.sensitivity = a.sens;
  p.fade_range = a.fade > 0.0 ? a.fade : bundle.meta().fade_range;
  if (a.viewport.empty()) {
    if (!(a.level >= 0.0 && a.level <= bundle.geometry().top_level())) {
      throw UsageError("--level outside [0, " +
                       std::to_string(bundle.geometry().top_level()) + "]");
    }
    const auto [w, h] = display_dimensions(bundle.geometry(), a.level);
    p.viewport = {0, 0, w, h};
  } else {
    const auto v = split(a.viewport, ',');
    if (v.size() != 4) throw UsageError("--viewport expects x,y,w,h");
    p.viewport = {to_int(v[0], "--viewport"), to_int(v[1], "--viewport"),
                  to_int(v[2], "--viewport"), to_int(v[3], "--viewport")};
  }
  const auto bad = invalid_fields(bundle, p);
  if (!bad.empty()) {
    std::string msg = "invalid view parameters:";
    for (const auto& f : bad) msg += " " + f;
    throw UsageError(msg);
  }
  save_png(a.out, render_region(bundle, p));
  return 0;
}

// ---------------------------------------------------------------- stats

struct DirUsage {
  long long tiles = 0;
  long long bytes = 0;
};

DirUsage usage_of(const fs::path& dir) {
  DirUsage u;
  if (!fs::exists(dir)) return u;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      ++u.tiles;
      u.bytes += static_cast<long long>(e.file_size());
    }
  }
  return u;
}

int run_stats(const std::string& slide, bool json_out) {
  const SlideBundle bundle = SlideBundle::load(slide);
  const SlideMeta& m = bundle.meta();
  const DirUsage orig = usage_of(fs::path(slide) / "original");
  const TileBudget budget =
      tile_accounting(m.width, m.height, m.tile_size, m.start_levels, m.drop_base);
  const TileBudget kept =
      tile_accounting(m.width, m.height, m.tile_size, m.start_levels, false);
  const TileBudget dropped =
      tile_accounting(m.width, m.height, m.tile_size, m.start_levels, true);
  json per = json::array();
  DirUsage sens;
  bool matches = orig.tiles == budget.original_tiles;
  for (const auto& pb : budget.per_pyramid) {
    const DirUsage u = usage_of(fs::path(slide) / "importance" /
                                ("s" + std::to_string(pb.start_level)));
    sens.tiles += u.tiles;
    sens.bytes += u.bytes;
    matches = matches && u.tiles == pb.tiles;
    per.push_back({{"start_level", pb.start_level},
                   {"tiles", u.tiles},
                   {"expected_tiles", pb.tiles},
                   {"bytes", u.bytes}});
  }
  const double tile_ratio =
      orig.tiles > 0 ? static_cast<double>(sens.tiles) / orig.tiles : 0.0;
  const double byte_ratio =
      orig.bytes > 0 ? static_cast<double>(sens.bytes) / orig.bytes : 0.0;
  const double drop_factor =
      dropped.sensitivity_tiles > 0
          ? static_cast<double>(kept.sensitivity_tiles) / dropped.sensitivity_tiles
          : 0.0;
  json j{{"id", m.id},
         {"drop_base", m.drop_base},
         {"start_levels", m.start_levels},
         {"original", {{"tiles", orig.tiles}, {"bytes", orig.bytes}}},
         {"sensitivity",
          {{"tiles", sens.tiles}, {"bytes", sens.bytes}, {"per_pyramid", per}}},
         {"overhead_ratio_tiles", tile_ratio},
         {"overhead_ratio_bytes", byte_ratio},
         {"accounting",
          {{"original_tiles", budget.original_tiles},
           {"sensitivity_tiles", budget.sensitivity_tiles},
           {"overhead_ratio", budget.overhead_ratio},
           {"sensitivity_tiles_keep_base", kept.sensitivity_tiles},
           {"sensitivity_tiles_drop_base", dropped.sensitivity_tiles},
           {"drop_base_reduction", drop_factor}}},
         {"matches_accounting", matches}};
  if (json_out) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "slide " << m.id << " (drop_base " << (m.drop_base ? "on" : "off")
            << ")\n";
  std::cout << "pyramid        tiles        bytes\n";
  std::cout << std::left << std::setw(10) << "original" << std::right
            << std::setw(10) << orig.tiles << std::setw(13) << orig.bytes << '\n';
  for (const auto& p : per) {
    std::cout << std::left << std::setw(10)
              << ("s" + std::to_string(p["start_level"].get<int>())) << std::right
              << std::setw(10) << p["tiles"].get<long long>() << std::setw(13)
              << p["bytes"].get<long long>() << '\n';
  }
  std::cout << "overhead by tiles: " << tile_ratio << ", by bytes: " << byte_ratio
            << '\n';
  std::cout << "drop-base reduction factor: " << drop_factor << '\n';
  std::cout << "on-disk tiles match accounting: " << (matches ? "yes" : "no")
            << '\n';
  return 0;
}

// ---------------------------------------------------------- analyze-log

int run_analyze(const std::string& file, bool json_out, const std::string& csv) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file);
  const ParsedLog log = parse_log(in);
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& e : log.errors) {
    std::cerr << "error: line " << e.line << ": " << e.message << '\n';
  }
  const SessionReport report = analyze_session(log.events);
  if (!csv.empty()) {
    std::ofstream act(csv + "_activity.csv");
    act << "second,activity\n";
    for (std::size_t s = 0; s < report.timeline.seconds.size(); ++s) {
      act << s << ',' << to_string(report.timeline.seconds[s]) << '\n';
    }
    std::ofstream zoom(csv + "_zoom.csv");
    zoom << "level,seconds\n";
    for (const auto& [l, sec] : report.zoom_histogram) {
      zoom << l << ',' << sec << '\n';
    }
    if (!act || !zoom) throw IoError("cannot write CSV output");
  }
  if (json_out) {
    std::cout << to_json_value(report).dump(2) << '\n';
    return 0;
  }
  std::cout << std::fixed << std::setprecision(1);
  std::cout << "duration: " << report.duration_s << " s\n";
  for (Activity a : kActivities) {
    std::cout << std::left << std::setw(18) << to_string(a) << std::right
              << std::setw(6) << report.timeline.percentages.at(a) << " %\n";
  }
  std::cout << "seconds per zoom level:\n";
  for (const auto& [l, sec] : report.zoom_histogram) {
    std::cout << "  level " << l << ": " << sec << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- curve

int run_curve(const std::vector<int>& steps, int points, const std::string& out) {
  if (points < 2) throw UsageError("--points must be at least 2");
  for (int m : steps) {
    if (m < 0 || m > 10) throw UsageError("--steps must lie in [0, 10]");
  }
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty() && out != "-") {
    file.open(out);
    if (!file) throw IoError("cannot create " + out);
    os = &file;
  }
  const auto grid = alpha_grid(points);
  bool header = true;
  for (int m : steps) {
    write_curve_csv(*os, contrast_curve(grid, m), header);
    header = false;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stain-density enhancement for tiled image pyramids"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a deterministic synthetic slide");
  s->add_option("--width", synth.width, "Width in pixels")->required();
  s->add_option("--height", synth.height, "Height in pixels")->required();
  s->add_option("--background", synth.background, "Background r,g,b");
  s->add_option("--texture", synth.texture, "Background jitter amplitude");
  s->add_option("--blob", synth.blobs, "Blob x,y,diameter,density (repeatable)");
  s->add_option("--noise-rate", synth.noise_rate, "Bernoulli stained-pixel rate");
  s->add_option("--noise-density", synth.noise_density, "Density of noise pixels");
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--stain", synth.stain, "Profile JSON or built-in name");
  s->add_option("--out", synth.out, "Output PNG")->required();

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Build a slide bundle from an image");
  p->add_option("--input", pre.input, "Input RGB PNG")->required();
  p->add_option("--out", pre.out, "Slide directory")->required();
  p->add_option("--stain", pre.stain, "Profile JSON or built-in name")->required();
  p->add_option("--start-levels", pre.start_levels, "a..b or a,b,c (default 1..L)");
  p->add_flag("--no-drop-base", pre.no_drop_base, "Persist each pyramid's base plane");
  p->add_option("--tile-size", pre.tile_size, "Tile size in pixels");
  p->add_option("--workers", pre.workers, "Worker threads (0 = all cores)");
  p->add_flag("--force", pre.force, "Overwrite an existing bundle");
  p->add_option("--id", pre.id, "Slide id (default: directory name)");
  p->add_option("--fade-range", pre.fade_range, "Zoom fade range in levels");
  p->add_flag("--json", pre.json_out, "Machine-readable report");

  RenderArgs ren;
  auto* r = app.add_subcommand("render", "Composite a view into a PNG");
  r->add_option("--slide", ren.slide, "Slide directory")->required();
  r->add_option("--level", ren.level, "Display level (may be fractional)")->required();
  r->add_option("--blend", ren.blend, "Blend factor in [0, 1]")->required();
  r->add_option("--sens", ren.sens, "Sensitivity start level")->required();
  r->add_option("--viewport", ren.viewport, "x,y,w,h in display-level pixels");
  r->add_option("--fade", ren.fade, "Fade range override");
  r->add_option("--out", ren.out, "Output PNG")->required();

  std::string stats_slide;
  bool stats_json = false;
  auto* st = app.add_subcommand("stats", "Tile and byte budget of a bundle");
  st->add_option("--slide", stats_slide, "Slide directory")->required();
  st->add_flag("--json", stats_json, "Machine-readable report");

  std::string root;
  std::string host = "0.0.0.0";
  int port = 8080;
  auto* sv = app.add_subcommand("serve", "Serve a directory of bundles over HTTP");
  sv->add_option("--root", root, "Directory of slide bundles")->required();
  sv->add_option("--port", port, "TCP port");
  sv->add_option("--host", host, "Bind address");

  std::string log_file;
  bool log_json = false;
  std::string log_csv;
  auto* al = app.add_subcommand("analyze-log", "Summarize a session log");
  al->add_option("file", log_file, "Session log (JSON lines)")->required();
  al->add_flag("--json", log_json, "Machine-readable report");
  al->add_option("--csv", log_csv, "Write <prefix>_activity.csv and <prefix>_zoom.csv");

  std::vector<int> curve_steps{0, 1, 2, 3, 4};
  int curve_points = 101;
  std::string curve_out;
  auto* cu = app.add_subcommand("curve", "Expected-max contrast curves as CSV");
  cu->add_option("--steps", curve_steps, "Subsampling steps (repeatable)")
      ->check(CLI::Range(0, 10));
  cu->add_option("--points", curve_points, "Alpha grid points")
      ->check(CLI::Range(2, 100000));
  cu->add_option("--out", curve_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*s) return run_synth(synth);
    if (*p) return run_preprocess(pre);
    if (*r) return run_render(ren);
    if (*st) return run_stats(stats_slide, stats_json);
    if (*al) return run_analyze(log_file, log_json, log_csv);
    if (*cu) return run_curve(curve_steps, curve_points, curve_out);
    if (*sv) {
      TileServer server(root);
      std::cerr << "serving " << server.registry().slides().size()
                << " slide(s) from " << root << " on " << host << ":" << port
                << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
