// Copyright 2026 The Anchorcast Authors
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

#include "data.hpp"

#include "error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace anchorcast
{

using nlohmann::json;

namespace
{

struct SceneHeader
{
  std::int64_t id;
  int primary;
  int start;
  int end;
  std::size_t line;
};

[[noreturn]] void parse_fail(const std::string & source, std::size_t line, const std::string & what)
{
  fail(ErrorCode::kValidation, source + ":" + std::to_string(line) + ": " + what);
}

template <class T>
T field(const json & obj, const char * key, const std::string & source, std::size_t line)
{
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(source, line, std::string("missing field '") + key + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) parse_fail(source, line, std::string("field '") + key + "' is not a number");
    const double v = it->template get<double>();
    if (!std::isfinite(v)) parse_fail(source, line, std::string("field '") + key + "' is not finite");
    return v;
  } else {
    if (!it->is_number_integer()) parse_fail(source, line, std::string("field '") + key + "' is not an integer");
    return it->template get<T>();
  }
}

std::string format_coord(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace

std::vector<Scene> parse_scenes(std::istream & in, const std::string & source)
{
  std::vector<SceneHeader> headers;
  // frame -> pedestrian -> position
  std::map<int, std::map<int, Vec2>> tracks;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error & e) {
      parse_fail(source, line, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) parse_fail(source, line, "record is not an object");
    if (const auto it = rec.find("scene"); it != rec.end()) {
      if (!it->is_object()) parse_fail(source, line, "'scene' is not an object");
      SceneHeader h{
        field<std::int64_t>(*it, "id", source, line), field<int>(*it, "p", source, line),
        field<int>(*it, "s", source, line), field<int>(*it, "e", source, line), line};
      if (h.end < h.start) parse_fail(source, line, "scene ends before it starts");
      headers.push_back(h);
    } else if (const auto jt = rec.find("track"); jt != rec.end()) {
      if (!jt->is_object()) parse_fail(source, line, "'track' is not an object");
      const int f = field<int>(*jt, "f", source, line);
      const int p = field<int>(*jt, "p", source, line);
      const Vec2 pos{field<double>(*jt, "x", source, line), field<double>(*jt, "y", source, line)};
      auto [slot, inserted] = tracks[f].emplace(p, pos);
      if (!inserted && !(slot->second == pos)) {
        parse_fail(source, line, "conflicting duplicate track for pedestrian " + std::to_string(p));
      }
    } else {
      parse_fail(source, line, "record is neither a scene nor a track");
    }
  }

  std::vector<Scene> scenes;
  scenes.reserve(headers.size());
  for (const auto & h : headers) {
    const auto where = [&](const std::string & what) { parse_fail(source, h.line, "scene " + std::to_string(h.id) + ": " + what); };
    std::vector<int> primary_frames;
    for (auto it = tracks.lower_bound(h.start); it != tracks.end() && it->first <= h.end; ++it) {
      if (it->second.count(h.primary)) primary_frames.push_back(it->first);
    }
    if (primary_frames.empty() || primary_frames.front() != h.start || primary_frames.back() != h.end) {
      where("primary pedestrian must have tracks at the first and last frame");
    }
    const int stride = primary_frames.size() > 1 ? primary_frames[1] - primary_frames[0] : 1;
    if ((h.end - h.start) % stride != 0 ||
        static_cast<int>(primary_frames.size()) != (h.end - h.start) / stride + 1) {
      where("primary pedestrian has a gap");
    }
    const int n = (h.end - h.start) / stride + 1;
    for (std::size_t i = 1; i < primary_frames.size(); ++i) {
      if (primary_frames[i] - primary_frames[i - 1] != stride) where("primary frames are not uniformly spaced");
    }

    Scene s;
    s.id = h.id;
    s.primary_id = h.primary;
    s.start_frame = h.start;
    s.frame_stride = stride;
    std::map<int, Trajectory> by_ped;
    for (auto it = tracks.lower_bound(h.start); it != tracks.end() && it->first <= h.end; ++it) {
      if ((it->first - h.start) % stride != 0) where("track frame " + std::to_string(it->first) + " is off the frame grid");
      const auto step = static_cast<std::size_t>((it->first - h.start) / stride);
      for (const auto & [ped, pos] : it->second) {
        auto & tr = by_ped[ped];
        if (tr.positions.empty()) {
          tr.pedestrian_id = ped;
          tr.positions.resize(static_cast<std::size_t>(n));
        }
        tr.positions[step] = pos;
      }
    }
    for (auto & [ped, tr] : by_ped) s.trajectories.push_back(std::move(tr));
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Scene> read_scenes(const std::string & path)
{
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<Scene> scenes = parse_scenes(in, path);
  const std::string goals = sidecar_path(path, "goals");
  if (std::filesystem::exists(goals)) read_goals(scenes, goals);
  return scenes;
}

void write_scenes(std::span<const Scene> scenes, std::ostream & out)
{
  std::vector<const Scene *> order;
  for (const auto & s : scenes) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Scene * a, const Scene * b) { return a->id < b->id; });

  std::map<std::pair<int, int>, Vec2> written;
  for (const Scene * s : order) {
    if (s->n_steps() == 0) fail(ErrorCode::kValidation, "scene " + std::to_string(s->id) + " has no frames");
    out << "{\"scene\": {\"id\": " << s->id << ", \"p\": " << s->primary_id << ", \"s\": " << s->start_frame
        << ", \"e\": " << s->frame_of(s->n_steps() - 1) << "}}\n";
    for (int t = 0; t < s->n_steps(); ++t) {
      const int frame = s->frame_of(t);
      for (const auto & tr : s->trajectories) {
        if (!tr.present(t)) continue;
        const Vec2 pos = tr.at(t);
        const auto [it, fresh] = written.emplace(std::make_pair(frame, tr.pedestrian_id), pos);
        if (!fresh) {
          if (!(it->second == pos)) {
            fail(
              ErrorCode::kValidation, "pedestrian " + std::to_string(tr.pedestrian_id) + " has two positions at frame " +
                                        std::to_string(frame));
          }
          continue;
        }
        out << "{\"track\": {\"f\": " << frame << ", \"p\": " << tr.pedestrian_id << ", \"x\": " << format_coord(pos.x)
            << ", \"y\": " << format_coord(pos.y) << "}}\n";
      }
    }
  }
}

void write_scenes(std::span<const Scene> scenes, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  write_scenes(scenes, out);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
  const bool has_goals = std::any_of(scenes.begin(), scenes.end(), [](const Scene & s) { return !s.goals.empty(); });
  if (has_goals) write_goals(scenes, sidecar_path(path, "goals"));
}

std::string sidecar_path(const std::string & data_path, const std::string & tag, const std::string & ext)
{
  std::filesystem::path p(data_path);
  return (p.parent_path() / (p.stem().string() + "." + tag + ext)).string();
}

void write_goals(std::span<const Scene> scenes, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  std::vector<const Scene *> order;
  for (const auto & s : scenes) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Scene * a, const Scene * b) { return a->id < b->id; });
  for (const Scene * s : order) {
    for (const auto & [ped, g] : s->goals) {
      out << "{\"goal\": {\"scene\": " << s->id << ", \"p\": " << ped << ", \"x\": " << format_coord(g.x)
          << ", \"y\": " << format_coord(g.y) << "}}\n";
    }
  }
}

void read_goals(std::vector<Scene> & scenes, const std::string & path)
{
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::map<std::int64_t, Scene *> by_id;
  for (auto & s : scenes) by_id[s.id] = &s;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error & e) {
      parse_fail(path, line, std::string("malformed JSON: ") + e.what());
    }
    const auto it = rec.find("goal");
    if (it == rec.end() || !it->is_object()) parse_fail(path, line, "expected a goal record");
    const auto sid = field<std::int64_t>(*it, "scene", path, line);
    const auto found = by_id.find(sid);
    if (found == by_id.end()) parse_fail(path, line, "goal for unknown scene " + std::to_string(sid));
    found->second->goals[field<int>(*it, "p", path, line)] =
      Vec2{field<double>(*it, "x", path, line), field<double>(*it, "y", path, line)};
  }
}

void write_choices(std::span<const ChoiceRecord> records, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto & r : records) {
    json feats = json::array();
    for (const auto & row : r.features) feats.push_back(row);
    json rec = {{"choice", {{"scene", r.scene_id}, {"p", r.pedestrian_id}, {"t", r.step}, {"k", r.chosen}, {"features", feats}}}};
    out << rec.dump() << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

std::vector<ChoiceRecord> read_choices(const std::string & path)
{
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<ChoiceRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(text).at("choice");
      ChoiceRecord r;
      r.scene_id = rec.at("scene").get<std::int64_t>();
      r.pedestrian_id = rec.at("p").get<int>();
      r.step = rec.at("t").get<int>();
      r.chosen = rec.at("k").get<std::size_t>();
      for (const auto & row : rec.at("features")) r.features.push_back(row.get<std::array<double, kNumFeatures>>());
      if (r.chosen >= r.features.size()) parse_fail(path, line, "chosen anchor out of range");
      out.push_back(std::move(r));
    } catch (const json::exception & e) {
      parse_fail(path, line, std::string("bad choice record: ") + e.what());
    }
  }
  return out;
}

}  // namespace anchorcast
