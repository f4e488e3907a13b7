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

/// @file analytics.hpp
/// @brief Viewer interaction logs (JSON lines) and their behavioral
/// summaries: dominant activity per second and time spent per zoom level.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scalestain/error.hpp"

namespace scalestain {

enum class EventKind { kPan, kZoom, kParam, kOpen, kDecide };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kPan: return "pan";
    case EventKind::kZoom: return "zoom";
    case EventKind::kParam: return "param";
    case EventKind::kOpen: return "open";
    case EventKind::kDecide: return "decide";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(const std::string& s) {
  for (auto k : {EventKind::kPan, EventKind::kZoom, EventKind::kParam,
                 EventKind::kOpen, EventKind::kDecide}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct SessionEvent {
  long long t = 0;  // ms since session start
  EventKind kind = EventKind::kOpen;
  double level = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> blend;
  std::optional<int> sensitivity;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

inline nlohmann::json to_json_value(const SessionEvent& e) {
  nlohmann::json j{{"t", e.t},         {"kind", to_string(e.kind)},
                   {"level", e.level}, {"x", e.x},
                   {"y", e.y}};
  if (e.blend) j["blend"] = *e.blend;
  if (e.sensitivity) j["sensitivity"] = *e.sensitivity;
  return j;
}

/// One compact JSON object, no trailing newline.
inline std::string serialize_event(const SessionEvent& e) {
  return to_json_value(e).dump();
}

inline std::string serialize_events(const std::vector<SessionEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += serialize_event(e);
    out += '\n';
  }
  return out;
}

/// Parses one record; throws ParameterError describing the defect.
inline SessionEvent parse_event(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParameterError("record is not an object");
  SessionEvent e;
  try {
    const auto& t = j.at("t");
    if (!t.is_number()) throw ParameterError("t must be a number");
    e.t = t.get<long long>();
    if (e.t < 0) throw ParameterError("t must be >= 0");
    const auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw ParameterError("unknown kind");
    e.kind = *kind;
    e.level = j.at("level").get<double>();
    if (!(e.level >= 0.0)) throw ParameterError("level must be >= 0");
    e.x = j.value("x", 0.0);
    e.y = j.value("y", 0.0);
    if (j.contains("blend") && !j["blend"].is_null()) {
      e.blend = j["blend"].get<double>();
    }
    if (j.contains("sensitivity") && !j["sensitivity"].is_null()) {
      e.sensitivity = j["sensitivity"].get<int>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParameterError(std::string("bad field: ") + ex.what());
  }
  return e;
}

struct LineError {
  int line = 0;  // 1-based
  std::string message;
};

struct ParsedLog {
  std::vector<SessionEvent> events;
  std::vector<LineError> errors;
  std::vector<std::string> warnings;
};

/// Parses every non-blank line, keeping input order. Bad lines are reported
/// and skipped.
inline ParsedLog parse_lines(std::istream& in) {
  ParsedLog out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.events.push_back(parse_event(line));
    } catch (const ParameterError& e) {
      out.errors.push_back({number, e.what()});
    }
  }
  return out;
}

/// parse_lines followed by a stable sort on t.
inline ParsedLog parse_log(std::istream& in) {
  ParsedLog out = parse_lines(in);
  const auto by_t = [](const SessionEvent& a, const SessionEvent& b) {
    return a.t < b.t;
  };
  if (!std::is_sorted(out.events.begin(), out.events.end(), by_t)) {
    out.warnings.emplace_back("timestamps out of order; events re-sorted");
    std::stable_sort(out.events.begin(), out.events.end(), by_t);
  }
  return out;
}

inline ParsedLog parse_log(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

enum class Activity { kParameterAdjust, kPan, kZoom, kDwell };

inline const char* to_string(Activity a) {
  switch (a) {
    case Activity::kParameterAdjust: return "parameter-adjust";
    case Activity::kPan: return "pan";
    case Activity::kZoom: return "zoom";
    case Activity::kDwell: return "dwell";
  }
  return "?";
}

inline constexpr std::array<Activity, 4> kActivities = {
    Activity::kParameterAdjust, Activity::kPan, Activity::kZoom,
    Activity::kDwell};

struct ActivityTimeline {
  std::vector<Activity> seconds;
  std::map<Activity, double> percentages;
};

inline constexpr long long kEventCoverMs = 1000;

/// Session end in ms: the explicit duration, else the last timestamp.
inline long long session_end(const std::vector<SessionEvent>& events,
                             std::optional<long long> duration_ms) {
  if (duration_ms) return *duration_ms;
  return events.empty() ? 0 : events.back().t;
}

/// Labels each whole second by the activity covering most of it. A pan,
/// zoom or param event covers the time until the next later event of any
/// kind, at most one second. Open/decide events cover nothing. Seconds without
/// coverage are dwell; exact ties prefer param, then zoom, then pan.
inline ActivityTimeline dominant_activity_per_second(
    const std::vector<SessionEvent>& events,
    std::optional<long long> duration_ms = std::nullopt) {
  const long long end = session_end(events, duration_ms);
  const auto n = static_cast<std::size_t>((std::max(end, 0LL) + 999) / 1000);
  // Coverage in ms per second for param, zoom, pan (priority order).
  std::vector<std::array<long long, 3>> cover(n, {0, 0, 0});
  for (std::size_t i = 0; i < events.size(); ++i) {
    const SessionEvent& e = events[i];
    int slot;
    switch (e.kind) {
      case EventKind::kParam: slot = 0; break;
      case EventKind::kZoom: slot = 1; break;
      case EventKind::kPan: slot = 2; break;
      default: continue;
    }
    long long stop = e.t + kEventCoverMs;
    // Events sharing a timestamp all run to the next later one, so the
    // labels do not depend on how ties were ordered in the file.
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      if (events[j].t > e.t) {
        stop = std::min(stop, events[j].t);
        break;
      }
    }
    stop = std::min(stop, end);
    for (long long s = e.t; s < stop;) {
      const long long sec = s / 1000;
      const long long next = std::min(stop, (sec + 1) * 1000);
      cover[static_cast<std::size_t>(sec)][slot] += next - s;
      s = next;
    }
  }
  constexpr Activity by_slot[3] = {Activity::kParameterAdjust, Activity::kZoom,
                                   Activity::kPan};
  ActivityTimeline out;
  out.seconds.reserve(n);
  std::map<Activity, long long> counts;
  for (const auto& c : cover) {
    int best = -1;
    for (int s = 0; s < 3; ++s) {
      if (c[s] > 0 && (best < 0 || c[s] > c[best])) best = s;
    }
    const Activity a = best < 0 ? Activity::kDwell : by_slot[best];
    out.seconds.push_back(a);
    ++counts[a];
  }
  for (Activity a : kActivities) {
    out.percentages[a] =
        n == 0 ? 0.0 : 100.0 * static_cast<double>(counts[a]) / n;
  }
  return out;
}

/// Seconds spent at each rounded display level. The interval between two
/// consecutive events belongs to the level of the earlier one.
inline std::map<int, double> zoom_time_histogram(
    const std::vector<SessionEvent>& events) {
  std::map<int, long long> ms;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    const int level = static_cast<int>(std::lround(events[i].level));
    ms[level] += events[i + 1].t - events[i].t;
  }
  std::map<int, double> bins;
  for (const auto& [level, t] : ms) bins[level] = static_cast<double>(t) / 1000.0;
  return bins;
}

struct SessionReport {
  ActivityTimeline timeline;
  std::map<int, double> zoom_histogram;
  double duration_s = 0.0;
};

inline SessionReport analyze_session(const std::vector<SessionEvent>& events) {
  SessionReport r;
  r.timeline = dominant_activity_per_second(events);
  r.zoom_histogram = zoom_time_histogram(events);
  if (!events.empty()) {
    r.duration_s =
        static_cast<double>(events.back().t - events.front().t) / 1000.0;
  }
  return r;
}

/// `{activity_percentages, zoom_histogram, duration_s}` plus the timeline.
inline nlohmann::json to_json_value(const SessionReport& r) {
  nlohmann::json pct = nlohmann::json::object();
  for (const auto& [a, p] : r.timeline.percentages) pct[to_string(a)] = p;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [l, s] : r.zoom_histogram) hist[std::to_string(l)] = s;
  nlohmann::json labels = nlohmann::json::array();
  for (Activity a : r.timeline.seconds) labels.push_back(to_string(a));
  return {{"activity_percentages", pct},
          {"zoom_histogram", hist},
          {"duration_s", r.duration_s},
          {"seconds", labels}};
}

}  // namespace scalestain
