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

/// @file server.hpp
/// @brief Slide registry and the read-only HTTP tile service.
///
/// Routes:
///   GET  /api/slides
///   GET  /api/slides/{id}
///   GET  /api/slides/{id}/tiles/original/{level}/{x}/{y}
///   GET  /api/slides/{id}/tiles/importance/{k}/{level}/{x}/{y}
///   GET  /api/slides/{id}/render?level&x&y&w&h&blend&sens[&fade]
///   POST /api/slides/{id}/events[?session=name]   (JSON lines)

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "scalestain/analytics.hpp"
#include "scalestain/bundle.hpp"
#include "scalestain/error.hpp"
#include "scalestain/png_io.hpp"
#include "scalestain/render.hpp"

namespace scalestain {

struct RejectedBundle {
  fs::path dir;
  std::string reason;
};

/// Every valid bundle directly under a root directory, keyed by id.
class SlideRegistry {
 public:
  static SlideRegistry scan(const fs::path& root,
                            std::ostream* log = &std::clog) {
    SlideRegistry reg;
    reg.root_ = root;
    if (!fs::is_directory(root)) {
      throw IoError("slide root " + root.string() + " is not a directory");
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && entry.path().filename() != "logs") {
        dirs.push_back(entry.path());
      }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      std::string reason;
      try {
        SlideBundle b = SlideBundle::load(dir);
        const std::string id = b.meta().id;
        if (reg.slides_.count(id) != 0) {
          reason = "duplicate slide id '" + id + "'";
        } else {
          reg.slides_.emplace(id, std::move(b));
        }
      } catch (const std::exception& e) {
        reason = e.what();
      }
      if (!reason.empty()) {
        if (log) *log << "[registry] skipping " << dir.string() << ": " << reason << '\n';
        reg.rejected_.push_back({dir, reason});
      }
    }
    return reg;
  }

  [[nodiscard]] const fs::path& root() const { return root_; }
  [[nodiscard]] const std::map<std::string, SlideBundle>& slides() const {
    return slides_;
  }
  [[nodiscard]] const std::vector<RejectedBundle>& rejected() const {
    return rejected_;
  }
  [[nodiscard]] const SlideBundle* find(const std::string& id) const {
    const auto it = slides_.find(id);
    return it == slides_.end() ? nullptr : &it->second;
  }

 private:
  fs::path root_;
  std::map<std::string, SlideBundle> slides_;
  std::vector<RejectedBundle> rejected_;
};

inline constexpr long long kMaxRenderPixels = 4096LL * 4096LL;

namespace detail {

inline void json_error(httplib::Response& res, int status,
                       const std::string& message,
                       const std::vector<std::string>& fields = {}) {
  nlohmann::json body{{"error", message}};
  if (!fields.empty()) body["fields"] = fields;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// std::from_chars for double is missing from some standard libraries.
template <>
inline std::optional<double> parse_number<double>(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline bool valid_session_name(const std::string& s) {
  static const std::regex pattern("[A-Za-z0-9_-][A-Za-z0-9_.-]{0,63}");
  return std::regex_match(s, pattern);
}

}  // namespace detail

/// Appends whole batches to session log files, one writer per file at a
/// time, with an fsync per batch.
class EventLogWriter {
 public:
  explicit EventLogWriter(fs::path root) : root_(std::move(root)) {}

  fs::path path_for(const std::string& slide, const std::string& session) const {
    return root_ / "logs" / slide / (session + ".jsonl");
  }

  void append(const std::string& slide, const std::string& session,
              const std::string& lines) {
    const fs::path path = path_for(slide, session);
    std::mutex& m = mutex_for(path.string());
    std::lock_guard lock(m);
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw IoError("cannot open " + path.string());
    std::size_t done = 0;
    while (done < lines.size()) {
      const ssize_t n = ::write(fd, lines.data() + done, lines.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        ::close(fd);
        throw IoError("write failed for " + path.string());
      }
      done += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced) throw IoError("fsync failed for " + path.string());
  }

 private:
  std::mutex& mutex_for(const std::string& key) {
    std::lock_guard lock(table_mutex_);
    auto& slot = mutexes_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  fs::path root_;
  std::mutex table_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> mutexes_;
};

class TileServer {
 public:
  explicit TileServer(const fs::path& root, std::ostream* log = &std::clog)
      : registry_(SlideRegistry::scan(root, log)), events_(root) {
    install_routes();
  }

  [[nodiscard]] const SlideRegistry& registry() const { return registry_; }
  httplib::Server& http() { return server_; }

  bool listen(const std::string& host, int port) {
    return server_.listen(host, port);
  }
  int bind_to_any_port(const std::string& host) {
    return server_.bind_to_any_port(host);
  }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  const SlideBundle* slide_or_404(const std::string& id,
                                  httplib::Response& res) const {
    const SlideBundle* b = registry_.find(id);
    if (b == nullptr) detail::json_error(res, 404, "unknown slide '" + id + "'");
    return b;
  }

  static std::optional<TileAddress> address(const httplib::Request& req,
                                            int first_group) {
    const auto l = detail::parse_number<int>(req.matches[first_group]);
    const auto c = detail::parse_number<int>(req.matches[first_group + 1]);
    const auto r = detail::parse_number<int>(req.matches[first_group + 2]);
    if (!l || !c || !r) return std::nullopt;
    return TileAddress{*l, *c, *r};
  }

  static void send_tile(httplib::Response& res, std::vector<std::uint8_t> bytes) {
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
  }

  void install_routes() {
    server_.set_default_headers(
        {{"Access-Control-Allow-Origin", "*"},
         {"Access-Control-Expose-Headers", "X-Interpolated"}});

    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server_.Get("/api/slides", [this](const httplib::Request&,
                                      httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, b] : registry_.slides()) {
        list.push_back({{"id", id},
                        {"width", b.meta().width},
                        {"height", b.meta().height},
                        {"levels", b.meta().levels}});
      }
      res.set_content(list.dump(), "application/json");
    });

    server_.Get(R"(/api/slides/([^/]+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
      const SlideBundle* b = slide_or_404(req.matches[1], res);
      if (b == nullptr) return;
      res.set_content(nlohmann::json(b->meta()).dump(), "application/json");
    });

    server_.Get(R"(/api/slides/([^/]+)/tiles/original/(\d+)/(\d+)/(\d+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const SlideBundle* b = slide_or_404(req.matches[1], res);
                  if (b == nullptr) return;
                  const auto a = address(req, 2);
                  const DiskPyramid orig = b->original();
                  if (!a || !orig.contains(*a)) {
                    detail::json_error(res, 404, "tile out of bounds");
                    return;
                  }
                  try {
                    (void)orig.tile(*a);  // verifies the stored tile decodes
                    send_tile(res, orig.tile_bytes(*a));
                  } catch (const Error& e) {
                    detail::json_error(res, 500,
                                       "original tile " + a->str() + ": " + e.what());
                  }
                });

    server_.Get(
        R"(/api/slides/([^/]+)/tiles/importance/(-?\d+)/(\d+)/(\d+)/(\d+))",
        [this](const httplib::Request& req, httplib::Response& res) {
          const SlideBundle* b = slide_or_404(req.matches[1], res);
          if (b == nullptr) return;
          const auto k = detail::parse_number<int>(req.matches[2]);
          if (!k || !b->meta().has_start_level(*k)) {
            detail::json_error(res, 400, "unknown sensitivity",
                               {"sensitivity"});
            return;
          }
          const auto a = address(req, 3);
          if (!a || !b->geometry().contains(*a)) {
            detail::json_error(res, 404, "tile out of bounds");
            return;
          }
          try {
            const DiskPyramid imp = b->importance(*k);
            if (imp.contains(*a)) {
              (void)imp.tile(*a);
              send_tile(res, imp.tile_bytes(*a));
              return;
            }
            const RegionRead r = importance_lookup(*b, *k, *a);
            res.set_header("X-Interpolated", "true");
            send_tile(res, encode_png(r.image));
          } catch (const Error& e) {
            detail::json_error(res, 500,
                               "importance tile s" + std::to_string(*k) + " " +
                                   a->str() + ": " + e.what());
          }
        });

    server_.Get(R"(/api/slides/([^/]+)/render)", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
      const SlideBundle* b = slide_or_404(req.matches[1], res);
      if (b == nullptr) return;
      std::vector<std::string> bad;
      auto number = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        if (!req.has_param(key)) {
          bad.emplace_back(key);
          return fallback;
        }
        const auto v = detail::parse_number<T>(req.get_param_value(key));
        if (!v) {
          bad.emplace_back(key);
          return fallback;
        }
        return *v;
      };
      ViewParams p;
      p.display_level = number("level", 0.0);
      p.viewport.x = number("x", 0);
      p.viewport.y = number("y", 0);
      p.viewport.w = number("w", 1);
      p.viewport.h = number("h", 1);
      p.blend = number("blend", 0.0);
      p.sensitivity = number("sens", 0);
      p.fade_range = b->meta().fade_range;
      if (req.has_param("fade")) p.fade_range = number("fade", 0.0);
      if (!bad.empty()) {
        detail::json_error(res, 400, "invalid render parameters", bad);
        return;
      }
      if (static_cast<long long>(p.viewport.w) * p.viewport.h > kMaxRenderPixels) {
        detail::json_error(res, 400, "viewport larger than 4096x4096 pixels",
                           {"w", "h"});
        return;
      }
      bad = invalid_fields(*b, p);
      if (!bad.empty()) {
        detail::json_error(res, 400, "invalid render parameters", bad);
        return;
      }
      try {
        const RasterImage img = render_region(*b, p);
        const auto png = encode_png(img);
        res.set_content(std::string(png.begin(), png.end()), "image/png");
      } catch (const Error& e) {
        detail::json_error(res, 500, std::string("render failed: ") + e.what());
      }
    });

    server_.Post(R"(/api/slides/([^/]+)/events)", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
      const std::string id = req.matches[1];
      if (slide_or_404(id, res) == nullptr) return;
      const std::string session =
          req.has_param("session") ? req.get_param_value("session") : "default";
      if (!detail::valid_session_name(session)) {
        detail::json_error(res, 400, "invalid session name", {"session"});
        return;
      }
      std::istringstream in(req.body);
      const ParsedLog parsed = parse_lines(in);
      if (!parsed.errors.empty() || parsed.events.empty()) {
        nlohmann::json errors = nlohmann::json::array();
        for (const auto& e : parsed.errors) {
          errors.push_back({{"line", e.line}, {"message", e.message}});
        }
        res.status = 400;
        res.set_content(
            nlohmann::json{{"error", parsed.events.empty() && errors.empty()
                                         ? "empty event batch"
                                         : "malformed event lines"},
                           {"lines", errors}}
                .dump(),
            "application/json");
        return;
      }
      try {
        events_.append(id, session, serialize_events(parsed.events));
      } catch (const Error& e) {
        detail::json_error(res, 500, e.what());
        return;
      }
      res.status = 204;
    });
  }

  SlideRegistry registry_;
  EventLogWriter events_;
  httplib::Server server_;
};

}  // namespace scalestain
