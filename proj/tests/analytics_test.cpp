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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "scalestain/analytics.hpp"

namespace scalestain {
namespace {

SessionEvent make(long long t, EventKind k, double level = 3.0) {
  SessionEvent e;
  e.t = t;
  e.kind = k;
  e.level = level;
  return e;
}

// One letter per second: A parameter-adjust, P pan, Z zoom, D dwell.
std::string letters(const ActivityTimeline& tl) {
  std::string s;
  for (Activity a : tl.seconds) {
    switch (a) {
      case Activity::kParameterAdjust: s += 'A'; break;
      case Activity::kPan: s += 'P'; break;
      case Activity::kZoom: s += 'Z'; break;
      case Activity::kDwell: s += 'D'; break;
    }
  }
  return s;
}

std::string repeat(char c, int n) { return std::string(static_cast<std::size_t>(n), c); }

ParsedLog load_fixture(const std::string& name) {
  std::ifstream in(std::string(SCALESTAIN_FIXTURES) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  return parse_log(in);
}

TEST(ParseEvent, RoundTrip) {
  SessionEvent e = make(1500, EventKind::kParam, 2.25);
  e.x = 100.5;
  e.y = 7.0;
  e.blend = 0.4;
  e.sensitivity = 3;
  EXPECT_EQ(parse_event(serialize_event(e)), e);
}

TEST(ParseEvent, RejectsDefects) {
  EXPECT_THROW(parse_event("not json"), ParameterError);
  EXPECT_THROW(parse_event("[1,2]"), ParameterError);
  EXPECT_THROW(parse_event(R"({"t":-1,"kind":"pan","level":1})"), ParameterError);
  EXPECT_THROW(parse_event(R"({"t":5,"kind":"wiggle","level":1})"), ParameterError);
  EXPECT_THROW(parse_event(R"({"t":5,"kind":"pan"})"), ParameterError);
  EXPECT_THROW(parse_event(R"({"t":"5","kind":"pan","level":1})"), ParameterError);
}

TEST(ParseLog, EmptyStream) {
  const ParsedLog log = parse_log(std::string());
  EXPECT_TRUE(log.events.empty());
  EXPECT_TRUE(log.errors.empty());
}

TEST(ParseLog, CollectsErrorsWithLineNumbers) {
  const ParsedLog log = parse_log(
      "{\"t\":0,\"kind\":\"open\",\"level\":5}\n"
      "garbage\n"
      "\n"
      "{\"t\":10,\"kind\":\"pan\",\"level\":5}\n"
      "{\"t\":20,\"kind\":\"spin\",\"level\":5}\n");
  ASSERT_EQ(log.events.size(), 2u);
  ASSERT_EQ(log.errors.size(), 2u);
  EXPECT_EQ(log.errors[0].line, 2);
  EXPECT_EQ(log.errors[1].line, 5);
}

TEST(ParseLog, StableResortWithWarning) {
  const ParsedLog log = parse_log(
      "{\"t\":50,\"kind\":\"pan\",\"level\":1,\"x\":1}\n"
      "{\"t\":10,\"kind\":\"zoom\",\"level\":2}\n"
      "{\"t\":50,\"kind\":\"pan\",\"level\":1,\"x\":2}\n");
  ASSERT_EQ(log.events.size(), 3u);
  EXPECT_EQ(log.events[0].t, 10);
  EXPECT_EQ(log.events[1].x, 1.0);
  EXPECT_EQ(log.events[2].x, 2.0);
  EXPECT_EQ(log.warnings.size(), 1u);
  EXPECT_TRUE(parse_log(serialize_events(log.events)).warnings.empty());
}

TEST(ParseLog, ThreeLineFixtureRoundTrips) {
  const std::string text =
      "{\"kind\":\"open\",\"t\":0,\"level\":6,\"x\":4096,\"y\":4096}\n"
      "{\"t\":1200,\"kind\":\"pan\",\"level\":6,\"x\":4200,\"y\":4096}\n"
      "{\"t\":2500,\"level\":5.5,\"kind\":\"zoom\",\"x\":4200,\"y\":4096}\n";
  const ParsedLog log = parse_log(text);
  ASSERT_EQ(log.events.size(), 3u);
  const std::string normalized = serialize_events(log.events);
  EXPECT_EQ(serialize_events(parse_log(normalized).events), normalized);
  EXPECT_EQ(normalized.substr(0, normalized.find('\n')),
            R"({"kind":"open","level":6.0,"t":0,"x":4096.0,"y":4096.0})");
}

TEST(DominantActivity, SilenceIsDwell) {
  const auto tl = dominant_activity_per_second(
      {make(0, EventKind::kOpen), make(10000, EventKind::kDecide)});
  EXPECT_EQ(letters(tl), repeat('D', 10));
  EXPECT_DOUBLE_EQ(tl.percentages.at(Activity::kDwell), 100.0);
}

TEST(DominantActivity, ExplicitDuration) {
  const auto tl = dominant_activity_per_second({}, 3000);
  EXPECT_EQ(letters(tl), "DDD");
}

TEST(DominantActivity, ParamBeatsPanByCoverage) {
  const auto tl = dominant_activity_per_second(
      {make(0, EventKind::kOpen), make(1000, EventKind::kParam),
       make(1600, EventKind::kPan), make(2000, EventKind::kDecide)});
  EXPECT_EQ(letters(tl), "DA");
}

TEST(DominantActivity, TiesPreferParamThenZoom) {
  const auto tl = dominant_activity_per_second(
      {make(0, EventKind::kPan), make(500, EventKind::kZoom),
       make(1000, EventKind::kZoom), make(1500, EventKind::kParam),
       make(2000, EventKind::kPan), make(2500, EventKind::kParam),
       make(3000, EventKind::kDecide)});
  EXPECT_EQ(letters(tl), "ZAA");
}

TEST(DominantActivity, CoverageCappedAtOneSecond) {
  const auto tl = dominant_activity_per_second(
      {make(0, EventKind::kZoom), make(5000, EventKind::kDecide)});
  EXPECT_EQ(letters(tl), "ZDDDD");
}

TEST(DominantActivity, SharedTimestampsIgnoreFileOrder) {
  const auto a = dominant_activity_per_second(
      {make(0, EventKind::kOpen), make(0, EventKind::kPan),
       make(3000, EventKind::kDecide)});
  const auto b = dominant_activity_per_second(
      {make(0, EventKind::kPan), make(0, EventKind::kOpen),
       make(3000, EventKind::kDecide)});
  EXPECT_EQ(letters(a), "PDD");
  EXPECT_EQ(letters(b), "PDD");
}

TEST(DominantActivity, PartialFinalSecond) {
  const auto tl = dominant_activity_per_second(
      {make(0, EventKind::kOpen), make(2200, EventKind::kPan),
       make(2400, EventKind::kDecide)});
  EXPECT_EQ(letters(tl), "DDP");
}

TEST(ZoomHistogram, SingleSegment) {
  const auto h = zoom_time_histogram(
      {make(0, EventKind::kOpen, 4.0), make(30000, EventKind::kDecide, 4.0)});
  EXPECT_EQ(h, (std::map<int, double>{{4, 30.0}}));
}

TEST(ZoomHistogram, RoundsToNearestLevel) {
  const auto h = zoom_time_histogram(
      {make(0, EventKind::kOpen, 2.4), make(1000, EventKind::kZoom, 2.6),
       make(3000, EventKind::kDecide, 0.0)});
  EXPECT_EQ(h, (std::map<int, double>{{2, 1.0}, {3, 2.0}}));
}

TEST(Fixtures, MixedSession) {
  const ParsedLog log = load_fixture("session_mixed.jsonl");
  ASSERT_TRUE(log.errors.empty());
  const SessionReport r = analyze_session(log.events);
  EXPECT_EQ(letters(r.timeline), repeat('D', 5) + repeat('P', 7) + repeat('Z', 8) +
                                     repeat('A', 10) + repeat('D', 10) + "AZAZ" +
                                     repeat('P', 11) + repeat('D', 5));
  EXPECT_EQ(r.zoom_histogram,
            (std::map<int, double>{{1, 16.0}, {2, 26.0}, {3, 2.0}, {4, 2.0},
                                   {5, 2.0}, {6, 12.0}}));
  EXPECT_NEAR(r.timeline.percentages.at(Activity::kDwell), 100.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.timeline.percentages.at(Activity::kPan), 30.0, 1e-9);
  EXPECT_NEAR(r.timeline.percentages.at(Activity::kZoom), 50.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.timeline.percentages.at(Activity::kParameterAdjust), 20.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.duration_s, 60.0);
}

TEST(Fixtures, TwoLevelSession) {
  const ParsedLog log = load_fixture("session_two_levels.jsonl");
  ASSERT_TRUE(log.errors.empty());
  const SessionReport r = analyze_session(log.events);
  std::string expect;
  for (int s = 0; s < 60; ++s) expect += s == 30 ? 'Z' : (s % 2 == 0 ? 'P' : 'D');
  EXPECT_EQ(letters(r.timeline), expect);
  EXPECT_EQ(r.zoom_histogram, (std::map<int, double>{{2, 30.0}, {5, 30.0}}));
}

TEST(Fixtures, PanThenIdle) {
  const ParsedLog log = load_fixture("session_pan_then_idle.jsonl");
  const SessionReport r = analyze_session(log.events);
  EXPECT_EQ(letters(r.timeline), "PPPP" + repeat('D', 56));
  EXPECT_EQ(r.zoom_histogram, (std::map<int, double>{{3, 60.0}}));
}

TEST(Invariants, ConservationAndOrderInsensitivity) {
  std::mt19937 rng(8);
  for (const char* name : {"session_mixed.jsonl", "session_two_levels.jsonl",
                           "session_pan_then_idle.jsonl"}) {
    const ParsedLog log = load_fixture(name);
    const SessionReport r = analyze_session(log.events);
    double total = 0.0;
    for (const auto& [l, s] : r.zoom_histogram) total += s;
    EXPECT_NEAR(total, (log.events.back().t - log.events.front().t) / 1000.0, 1.0);
    double pct = 0.0;
    for (const auto& [a, p] : r.timeline.percentages) pct += p;
    EXPECT_NEAR(pct, 100.0, 0.5);

    // Shuffle whole lines; events sharing a timestamp keep their order.
    std::vector<std::size_t> order(log.events.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::map<long long, std::vector<std::size_t>> slots;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      slots[log.events[order[pos]].t].push_back(pos);
    }
    std::vector<SessionEvent> shuffled(log.events.size());
    std::map<long long, std::size_t> next;
    for (const SessionEvent& e : log.events) {
      shuffled[slots[e.t][next[e.t]++]] = e;
    }
    const ParsedLog again = parse_log(serialize_events(shuffled));
    const SessionReport r2 = analyze_session(again.events);
    EXPECT_EQ(letters(r2.timeline), letters(r.timeline)) << name;
    EXPECT_EQ(r2.zoom_histogram, r.zoom_histogram) << name;
  }
}

TEST(ReportJson, Shape) {
  const SessionReport r = analyze_session(
      {make(0, EventKind::kOpen, 4.0), make(1500, EventKind::kPan, 4.0),
       make(2000, EventKind::kDecide, 4.0)});
  const nlohmann::json j = to_json_value(r);
  EXPECT_EQ(j.at("duration_s"), 2.0);
  EXPECT_EQ(j.at("zoom_histogram").at("4"), 2.0);
  EXPECT_EQ(j.at("activity_percentages").at("pan"), 50.0);
  EXPECT_EQ(j.at("activity_percentages").at("dwell"), 50.0);
  EXPECT_EQ(j.at("seconds"), (nlohmann::json{"dwell", "pan"}));
}

}  // namespace
}  // namespace scalestain
