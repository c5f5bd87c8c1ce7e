/* Copyright 2026 The karel-search Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Result files and configuration text. Needs nlohmann/json on the include
// path.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "karel/dsl.hpp"
#include "karel/interpreter.hpp"
#include "karel/search.hpp"
#include "karel/world.hpp"

namespace karel {

inline constexpr std::string_view kVersion = "0.1.0";

/// Ordered key=value configuration. Lines starting with '#' are comments.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

inline ConfigMap read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Header block of '#' lines: version, then the resolved config in key order.
inline std::string describe(std::string_view command, const ConfigMap& cfg) {
  std::string out = "# karel-search " + std::string(kVersion) + " " + std::string(command) + "\n";
  for (const auto& [k, v] : cfg) out += "# " + k + "=" + v + "\n";
  return out;
}

/// Writes `content` to `path` via a temporary sibling and a rename, so a
/// reader never sees a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Shortest text that reads back to the same double.
inline std::string fmt(double x) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline nlohmann::ordered_json to_json(const SearchRecord& r) {
  nlohmann::ordered_json j;
  j["best_program"] = print(r.bestProgram);
  j["best_return"] = r.bestReturn;
  j["evaluations"] = r.evaluationsUsed;
  j["restarts"] = r.restarts;
  auto curve = nlohmann::ordered_json::array();
  for (const auto& p : r.curve) curve.push_back({p.evaluations, p.best});
  j["curve"] = std::move(curve);
  return j;
}

// ---------------------------------------------------------------------------
// Golden trajectories: one JSON object per line,
//   {"program": ..., "map": ..., "actions": [...], "terminal": ...}

struct GoldenTrajectory {
  std::string program;
  std::string map;
  std::vector<std::string> actions;
  std::string terminal;
};

inline std::vector<GoldenTrajectory> read_golden(std::istream& in) {
  std::vector<GoldenTrajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    GoldenTrajectory g;
    g.program = j.at("program").get<std::string>();
    g.map = j.at("map").get<std::string>();
    g.actions = j.at("actions").get<std::vector<std::string>>();
    g.terminal = j.at("terminal").get<std::string>();
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string golden_line(const Program& p, const WorldState& s, const Trajectory& t) {
  nlohmann::ordered_json j;
  j["program"] = print(p);
  j["map"] = to_map_text(s);
  auto acts = nlohmann::ordered_json::array();
  for (Action a : t.actions) acts.push_back(std::string(to_string(a)));
  j["actions"] = std::move(acts);
  j["terminal"] = std::string(to_string(t.terminal));
  return j.dump() + "\n";
}

}  // namespace karel
