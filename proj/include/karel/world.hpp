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

#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/rng.hpp"

namespace karel {

enum class Direction : std::uint8_t { North, East, South, West };

constexpr Direction turn_left(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 3) % 4); }
constexpr Direction turn_right(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 1) % 4); }

constexpr int row_delta(Direction d) { return d == Direction::North ? -1 : d == Direction::South ? 1 : 0; }
constexpr int col_delta(Direction d) { return d == Direction::East ? 1 : d == Direction::West ? -1 : 0; }

inline constexpr int kMaxMarkers = 10;

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Task-owned data carried with a state: landmark cells (flattened indices,
/// meaning fixed by the task) and a seed for any randomness inside episodes.
struct WorldExtra {
  std::vector<int> cells;
  std::uint64_t seed = 0;
  friend bool operator==(const WorldExtra&, const WorldExtra&) = default;
};

/// A wall-enclosed Karel grid. Row 0 is the top (north) edge.
struct WorldState {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> walls;    // row-major, 1 = wall
  std::vector<std::uint8_t> markers;  // row-major, 0..10
  int agentRow = 0;
  int agentCol = 0;
  Direction agentDir = Direction::East;
  bool crashed = false;
  WorldExtra extra;

  WorldState() = default;
  WorldState(int h, int w)
      : height(h), width(w), walls(static_cast<std::size_t>(h * w), 0), markers(static_cast<std::size_t>(h * w), 0) {
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (r == 0 || c == 0 || r == h - 1 || c == w - 1) walls[index(r, c)] = 1;
  }

  int index(int r, int c) const { return r * width + c; }
  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < height && c < width; }
  bool wall(int r, int c) const { return !in_bounds(r, c) || walls[index(r, c)] != 0; }
  int marker_count(int r, int c) const { return markers[index(r, c)]; }
  int agent_index() const { return index(agentRow, agentCol); }

  void set_wall(int r, int c, bool v = true) { walls[index(r, c)] = v ? 1 : 0; }
  void set_markers(int r, int c, int n) { markers[index(r, c)] = static_cast<std::uint8_t>(n); }
  void place_agent(int r, int c, Direction d) {
    agentRow = r;
    agentCol = c;
    agentDir = d;
  }

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const {
    if (height < 3 || width < 3) throw std::invalid_argument("world must be at least 3x3");
    if (walls.size() != static_cast<std::size_t>(height * width) || markers.size() != walls.size())
      throw std::invalid_argument("grid storage does not match dimensions");
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        if ((r == 0 || c == 0 || r == height - 1 || c == width - 1) && !wall(r, c))
          throw std::invalid_argument("border cell is not a wall");
        if (marker_count(r, c) > kMaxMarkers) throw std::invalid_argument("marker count above 10");
      }
    if (!in_bounds(agentRow, agentCol) || wall(agentRow, agentCol))
      throw std::invalid_argument("agent is out of bounds or inside a wall");
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline bool perceive(const WorldState& w, Percept h) {
  switch (h) {
    case Percept::FrontIsClear: {
      const Direction d = w.agentDir;
      return !w.wall(w.agentRow + row_delta(d), w.agentCol + col_delta(d));
    }
    case Percept::LeftIsClear: {
      const Direction d = turn_left(w.agentDir);
      return !w.wall(w.agentRow + row_delta(d), w.agentCol + col_delta(d));
    }
    case Percept::RightIsClear: {
      const Direction d = turn_right(w.agentDir);
      return !w.wall(w.agentRow + row_delta(d), w.agentCol + col_delta(d));
    }
    case Percept::MarkersPresent:
      return w.markers[w.agent_index()] > 0;
    case Percept::NoMarkersPresent:
      return w.markers[w.agent_index()] == 0;
  }
  return false;
}

inline bool evaluate(const WorldState& w, const Cond& c) { return perceive(w, c.percept) != c.negated; }

/// Applies `a` in place and reports whether it was valid. An invalid action
/// leaves the state unchanged, except that crashable mode sets `crashed`.
inline bool apply_action(WorldState& w, Action a, bool crashable) {
  bool valid = true;
  switch (a) {
    case Action::Move: {
      const int r = w.agentRow + row_delta(w.agentDir);
      const int c = w.agentCol + col_delta(w.agentDir);
      if (w.wall(r, c)) {
        valid = false;
      } else {
        w.agentRow = r;
        w.agentCol = c;
      }
      break;
    }
    case Action::TurnLeft:
      w.agentDir = turn_left(w.agentDir);
      break;
    case Action::TurnRight:
      w.agentDir = turn_right(w.agentDir);
      break;
    case Action::PutMarker: {
      auto& m = w.markers[w.agent_index()];
      if (m >= kMaxMarkers) valid = false;
      else ++m;
      break;
    }
    case Action::PickMarker: {
      auto& m = w.markers[w.agent_index()];
      if (m == 0) valid = false;
      else --m;
      break;
    }
  }
  if (!valid && crashable) w.crashed = true;
  return valid;
}

/// Value-returning form of apply_action.
inline WorldState apply_action(const WorldState& w, Action a, bool crashable, bool* valid_out) {
  WorldState next = w;
  const bool valid = apply_action(next, a, crashable);
  if (valid_out) *valid_out = valid;
  return next;
}

// ---------------------------------------------------------------------------
// Map text format
//
//   H W
//   H rows of W characters: '#' wall, '.' empty, '1'..'9' and 'A' marker
//   counts, '^' '>' 'v' '<' the agent (facing N/E/S/W) on an empty cell.

inline WorldState parse_map(std::string_view text) {
  std::istringstream in{std::string(text)};
  int h = 0, w = 0;
  if (!(in >> h >> w) || h < 3 || w < 3) throw std::invalid_argument("map header must be 'H W' with H,W >= 3");
  std::string line;
  std::getline(in, line);
  WorldState s(h, w);
  std::fill(s.walls.begin(), s.walls.end(), 0);
  bool agent = false;
  for (int r = 0; r < h; ++r) {
    if (!std::getline(in, line)) throw std::invalid_argument("map has fewer rows than its header says");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != w)
      throw std::invalid_argument("map row " + std::to_string(r) + " has wrong width");
    for (int c = 0; c < w; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      switch (ch) {
        case '#': s.set_wall(r, c); break;
        case '.': break;
        case 'A': s.set_markers(r, c, 10); break;
        case '^': case '>': case 'v': case '<': {
          if (agent) throw std::invalid_argument("map has more than one agent");
          agent = true;
          const Direction d = ch == '^' ? Direction::North : ch == '>' ? Direction::East
                              : ch == 'v' ? Direction::South : Direction::West;
          s.place_agent(r, c, d);
          break;
        }
        default:
          if (ch >= '1' && ch <= '9') s.set_markers(r, c, ch - '0');
          else throw std::invalid_argument(std::string("unknown map character '") + ch + "'");
      }
    }
  }
  if (!agent) throw std::invalid_argument("map has no agent");
  s.validate();
  return s;
}

/// Inverse of parse_map. The agent's cell must hold no markers.
inline std::string to_map_text(const WorldState& s) {
  std::string out = std::to_string(s.height) + " " + std::to_string(s.width) + "\n";
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      if (r == s.agentRow && c == s.agentCol) {
        if (s.marker_count(r, c) != 0) throw std::invalid_argument("agent cell holds markers; not representable");
        out += "^>v<"[static_cast<int>(s.agentDir)];
      } else if (s.wall(r, c)) {
        out += '#';
      } else {
        const int m = s.marker_count(r, c);
        out += m == 0 ? '.' : m == 10 ? 'A' : static_cast<char>('0' + m);
      }
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task-independent random maps

struct RandomWorldConfig {
  int height = 8;
  int width = 8;
  double wallDensity = 0.1;
  double markerDensity = 0.1;
};

inline WorldState random_world(Rng& rng, const RandomWorldConfig& cfg = {}) {
  if (cfg.wallDensity < 0.0 || cfg.wallDensity > 1.0 || cfg.markerDensity < 0.0 || cfg.markerDensity > 1.0)
    throw InvalidConfig("densities must lie in [0, 1]");
  if (cfg.height < 3 || cfg.width < 3) throw InvalidConfig("random world needs at least one interior cell");
  if (cfg.wallDensity >= 1.0) throw InvalidConfig("wall density 1 leaves no clear cell for the agent");
  for (;;) {
    WorldState s(cfg.height, cfg.width);
    std::vector<int> clear;
    for (int r = 1; r < cfg.height - 1; ++r)
      for (int c = 1; c < cfg.width - 1; ++c) {
        if (rng.bernoulli(cfg.wallDensity)) {
          s.set_wall(r, c);
        } else {
          clear.push_back(s.index(r, c));
          if (rng.bernoulli(cfg.markerDensity)) s.set_markers(r, c, 1);
        }
      }
    if (clear.empty()) continue;  // fully walled draw; resample
    const int cell = clear[rng.below(clear.size())];
    s.place_agent(cell / s.width, cell % s.width, static_cast<Direction>(rng.below(4)));
    return s;
  }
}

}  // namespace karel
