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

// The Karel and Karel-Hard problem sets: initial-state distributions and
// per-action reward bookkeeping.
//
// Rewards are paid the first time a goal item is achieved and are never
// taken back, so every return except StairClimber's -1 only grows during an
// episode. Truncating an episode (timeout or crash) can therefore never raise
// its return.

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/interpreter.hpp"
#include "karel/rng.hpp"
#include "karel/world.hpp"

namespace karel {

enum class TaskName : std::uint8_t {
  StairClimber,
  Maze,
  TopOff,
  FourCorners,
  Harvester,
  CleanHouse,
  DoorKey,
  OneStroke,
  Seeder,
  Snake
};

inline constexpr std::array<TaskName, 10> kAllTasks = {
    TaskName::StairClimber, TaskName::Maze,     TaskName::TopOff,    TaskName::FourCorners, TaskName::Harvester,
    TaskName::CleanHouse,   TaskName::DoorKey,  TaskName::OneStroke, TaskName::Seeder,      TaskName::Snake};

inline constexpr std::array<std::string_view, 10> kTaskIds = {
    "stairclimber", "maze", "topoff", "fourcorners", "harvester",
    "cleanhouse",   "doorkey", "onestroke", "seeder", "snake"};

inline constexpr std::string_view task_id(TaskName t) { return kTaskIds[static_cast<int>(t)]; }

inline TaskName task_from_id(std::string_view id) {
  for (std::size_t i = 0; i < kTaskIds.size(); ++i)
    if (kTaskIds[i] == id) return kAllTasks[i];
  throw std::invalid_argument("unknown task '" + std::string(id) + "'");
}

struct TaskSpec {
  TaskName name = TaskName::Harvester;
  int height = 8;
  int width = 8;
  bool crashable = false;
};

inline TaskSpec make_task(TaskName name, bool crashable = false) {
  static constexpr std::array<std::array<int, 2>, 10> kSizes = {{
      {12, 12}, {8, 8}, {12, 12}, {12, 12}, {8, 8}, {14, 22}, {8, 8}, {8, 8}, {8, 8}, {8, 8}}};
  const auto& sz = kSizes[static_cast<int>(name)];
  return TaskSpec{name, sz[0], sz[1], crashable};
}

struct EpisodeResult {
  double ret = 0.0;
  std::int64_t steps = 0;
  Terminal terminal = Terminal::ProgramEnded;
};

inline constexpr int kSnakeGoal = 20;

/// Fixed CleanHouse floor plan; the agent always starts at the '^'.
inline constexpr std::string_view kCleanHouseMap =
    "14 22\n"
    "######################\n"
    "#.....#.......#......#\n"
    "#.....#.......#......#\n"
    "#.....#..###..#..##..#\n"
    "#..........#.........#\n"
    "#.....#....#..#..#...#\n"
    "###.#####..#..####.###\n"
    "#.......#..#.........#\n"
    "#.......#.....#......#\n"
    "#..##...#..####..##..#\n"
    "#.......#.....#......#\n"
    "#............##......#\n"
    "#^......#.......#....#\n"
    "######################\n";

inline constexpr int kCleanHouseMarkers = 10;

// ---------------------------------------------------------------------------
// Initial states

namespace detail {

inline int pick(Rng& rng, const std::vector<int>& cells) { return cells[rng.below(cells.size())]; }

inline std::vector<int> interior_cells(const WorldState& s) {
  std::vector<int> v;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (!s.wall(r, c)) v.push_back(s.index(r, c));
  return v;
}

// Randomized depth-first carving over the interior. A cell is carved only
// while its sole carved neighbour is the cell we came from, so the carved set
// is a tree: exactly one path between any two open cells.
inline void carve_maze(WorldState& s, Rng& rng) {
  for (int r = 1; r < s.height - 1; ++r)
    for (int c = 1; c < s.width - 1; ++c) s.set_wall(r, c);
  auto interior = [&](int r, int c) { return r >= 1 && c >= 1 && r < s.height - 1 && c < s.width - 1; };
  auto open_neighbours = [&](int r, int c) {
    int n = 0;
    for (int d = 0; d < 4; ++d) {
      const int rr = r + row_delta(static_cast<Direction>(d)), cc = c + col_delta(static_cast<Direction>(d));
      if (interior(rr, cc) && !s.wall(rr, cc)) ++n;
    }
    return n;
  };
  const int r0 = rng.uniform_int(1, s.height - 2), c0 = rng.uniform_int(1, s.width - 2);
  s.set_wall(r0, c0, false);
  std::vector<std::array<int, 2>> stack = {{r0, c0}};
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    std::array<std::array<int, 2>, 4> cand{};
    int n = 0;
    for (int d = 0; d < 4; ++d) {
      const int rr = r + row_delta(static_cast<Direction>(d)), cc = c + col_delta(static_cast<Direction>(d));
      if (interior(rr, cc) && s.wall(rr, cc) && open_neighbours(rr, cc) == 1) cand[static_cast<std::size_t>(n++)] = {rr, cc};
    }
    if (n == 0) {
      stack.pop_back();
      continue;
    }
    const auto next = cand[rng.below(static_cast<std::uint64_t>(n))];
    s.set_wall(next[0], next[1], false);
    stack.push_back(next);
  }
}

}  // namespace detail

/// Deterministic initial state number `index` of the stream named by `seed`.
///
/// Landmarks recorded in `extra.cells`:
///   StairClimber [goal]; Maze [goal]; TopOff [initially marked cells];
///   DoorKey [key, goal, door]; Snake [marker].
inline WorldState sample_initial(const TaskSpec& task, std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(task.name) + 101), index));
  const int H = task.height, W = task.width;
  WorldState s(H, W);
  const int bottom = H - 2;
  switch (task.name) {
    case TaskName::StairClimber: {
      // Walls fill everything on or below the anti-diagonal r + c = H; the
      // walkable contour is the band r + c in {H-2, H-1}. Stair cells sit
      // directly on a wall step (r + c = H - 1).
      for (int r = 1; r < H - 1; ++r)
        for (int c = 1; c < W - 1; ++c)
          if (r + c >= H) s.set_wall(r, c);
      std::vector<int> stairs;
      for (int c = 1; c < W - 1; ++c) {
        const int r = H - 1 - c;
        if (r >= 1 && r < H - 1) stairs.push_back(s.index(r, c));
      }
      const auto a = static_cast<std::size_t>(rng.below(stairs.size() - 1));
      const auto g = a + 1 + static_cast<std::size_t>(rng.below(stairs.size() - 1 - a));
      s.place_agent(stairs[a] / W, stairs[a] % W, Direction::East);
      s.markers[static_cast<std::size_t>(stairs[g])] = 1;
      s.extra.cells = {stairs[g]};
      break;
    }
    case TaskName::Maze: {
      detail::carve_maze(s, rng);
      const auto open = detail::interior_cells(s);
      const int goal = detail::pick(rng, open);
      int agent = goal;
      while (agent == goal) agent = detail::pick(rng, open);
      s.markers[static_cast<std::size_t>(goal)] = 1;
      s.place_agent(agent / W, agent % W, static_cast<Direction>(rng.below(4)));
      s.extra.cells = {goal};
      break;
    }
    case TaskName::TopOff: {
      std::vector<int> marked;
      while (marked.empty()) {
        for (int c = 1; c < W - 1; ++c)
          if (rng.bernoulli(0.5)) marked.push_back(s.index(bottom, c));
      }
      for (int cell : marked) s.markers[static_cast<std::size_t>(cell)] = 1;
      s.place_agent(bottom, 1, Direction::East);
      s.extra.cells = marked;
      break;
    }
    case TaskName::FourCorners:
      s.place_agent(bottom, rng.uniform_int(1, W - 2), Direction::East);
      break;
    case TaskName::Harvester:
      for (int cell : detail::interior_cells(s)) s.markers[static_cast<std::size_t>(cell)] = 1;
      s.place_agent(bottom, rng.uniform_int(1, W - 2), Direction::East);
      break;
    case TaskName::CleanHouse: {
      s = parse_map(kCleanHouseMap);
      std::vector<int> near_wall;
      for (int cell : detail::interior_cells(s)) {
        const int r = cell / s.width, c = cell % s.width;
        if (cell == s.agent_index()) continue;
        if (s.wall(r - 1, c) || s.wall(r + 1, c) || s.wall(r, c - 1) || s.wall(r, c + 1)) near_wall.push_back(cell);
      }
      for (int i = 0; i < kCleanHouseMarkers; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(near_wall.size() - static_cast<std::size_t>(i));
        std::swap(near_wall[static_cast<std::size_t>(i)], near_wall[j]);
        s.markers[static_cast<std::size_t>(near_wall[static_cast<std::size_t>(i)])] = 1;
      }
      break;
    }
    case TaskName::DoorKey: {
      // A wall column splits the interior; the door is one cell of it.
      const int split = W / 2;
      for (int r = 1; r < H - 1; ++r) s.set_wall(r, split);
      const int door = s.index(rng.uniform_int(1, H - 2), split);
      std::vector<int> left, right;
      for (int cell : detail::interior_cells(s)) (cell % W < split ? left : right).push_back(cell);
      const int agent = detail::pick(rng, left);
      int key = agent;
      while (key == agent) key = detail::pick(rng, left);
      const int goal = detail::pick(rng, right);
      s.markers[static_cast<std::size_t>(key)] = 1;
      s.markers[static_cast<std::size_t>(goal)] = 1;
      s.place_agent(agent / W, agent % W, Direction::East);
      s.extra.cells = {key, goal, door};
      break;
    }
    case TaskName::OneStroke:
    case TaskName::Seeder: {
      const int agent = detail::pick(rng, detail::interior_cells(s));
      s.place_agent(agent / W, agent % W, Direction::East);
      break;
    }
    case TaskName::Snake: {
      const auto open = detail::interior_cells(s);
      const int agent = detail::pick(rng, open);
      int marker = agent;
      while (marker == agent) marker = detail::pick(rng, open);
      s.markers[static_cast<std::size_t>(marker)] = 1;
      s.place_agent(agent / W, agent % W, Direction::East);
      s.extra.cells = {marker};
      s.extra.seed = rng.next();
      break;
    }
  }
  return s;
}

inline std::vector<WorldState> sample_initial_states(const TaskSpec& task, std::uint64_t seed, int count) {
  std::vector<WorldState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_initial(task, seed, static_cast<std::uint64_t>(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Reward bookkeeping

/// Interpreter hooks implementing one task's reward and termination rules.
/// Progress is kept as an integer count over a fixed denominator.
class TaskHooks {
 public:
  TaskHooks(const TaskSpec& task, const WorldState& s0) : task_(task.name) {
    const std::size_t n = s0.walls.size();
    switch (task_) {
      case TaskName::StairClimber:
      case TaskName::Maze:
        goal_ = s0.extra.cells.at(0);
        denom_ = 1;
        break;
      case TaskName::TopOff:
        target_.assign(n, 0);
        for (int cell : s0.extra.cells) target_[static_cast<std::size_t>(cell)] = 1;
        denom_ = static_cast<int>(s0.extra.cells.size());
        done_.assign(n, 0);
        break;
      case TaskName::FourCorners: {
        target_.assign(n, 0);
        const int H = s0.height, W = s0.width;
        for (int cell : {s0.index(1, 1), s0.index(1, W - 2), s0.index(H - 2, 1), s0.index(H - 2, W - 2)})
          target_[static_cast<std::size_t>(cell)] = 1;
        denom_ = 4;
        done_.assign(n, 0);
        break;
      }
      case TaskName::Harvester:
      case TaskName::CleanHouse:
        target_.assign(n, 0);
        denom_ = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (s0.markers[i] > 0) {
            target_[i] = 1;
            ++denom_;
          }
        done_.assign(n, 0);
        break;
      case TaskName::DoorKey:
        key_ = s0.extra.cells.at(0);
        goal_ = s0.extra.cells.at(1);
        door_ = s0.extra.cells.at(2);
        denom_ = 2;
        break;
      case TaskName::OneStroke:
        target_.assign(n, 0);  // cells walled off by the stroke
        denom_ = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (!s0.walls[i]) ++denom_;
        progress_ = 1;  // the starting cell is visited
        break;
      case TaskName::Seeder:
        target_.assign(n, 0);
        denom_ = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (!s0.walls[i] && s0.markers[i] == 0) {
            target_[i] = 1;
            ++denom_;
          }
        done_.assign(n, 0);
        break;
      case TaskName::Snake:
        goal_ = s0.extra.cells.at(0);
        body_.push_back(s0.agent_index());
        rng_ = Rng(s0.extra.seed);
        denom_ = kSnakeGoal;
        break;
    }
  }

  /// Return accumulated so far.
  double current_return() const {
    if (failed_) return -1.0;
    if (denom_ == 0) return 0.0;
    return static_cast<double>(progress_) / static_cast<double>(denom_);
  }

  bool on_action(WorldState& w, Action a, bool valid) {
    const int here = w.agent_index();
    switch (task_) {
      case TaskName::StairClimber: {
        if (w.crashed) {
          // An invalid action is a fall off the stairs in crashable mode.
          failed_ = true;
          return false;
        }
        if (a != Action::Move || !valid) return true;
        const int band = w.agentRow + w.agentCol;
        if (band != w.height - 1 && band != w.height - 2) {
          failed_ = true;
          return false;
        }
        if (here == goal_) {
          progress_ = 1;
          return false;
        }
        return true;
      }
      case TaskName::Maze:
        if (a == Action::Move && valid && here == goal_) {
          progress_ = 1;
          return false;
        }
        return true;
      case TaskName::TopOff:
        if (a == Action::PutMarker && valid) credit(here, w.markers[static_cast<std::size_t>(here)] == 2);
        return progress_ < denom_;
      case TaskName::FourCorners:
        if (a == Action::PutMarker && valid) credit(here, w.markers[static_cast<std::size_t>(here)] == 1);
        return progress_ < denom_;
      case TaskName::Harvester:
      case TaskName::CleanHouse:
        if (a == Action::PickMarker && valid) credit(here, true);
        return progress_ < denom_;
      case TaskName::Seeder:
        if (a == Action::PutMarker && valid) credit(here, w.markers[static_cast<std::size_t>(here)] == 1);
        return progress_ < denom_;
      case TaskName::DoorKey:
        if (a == Action::PickMarker && valid && here == key_ && progress_ == 0) {
          progress_ = 1;
          w.walls[static_cast<std::size_t>(door_)] = 0;
          return true;
        }
        if (a == Action::Move && valid && here == goal_ && progress_ == 1) {
          progress_ = 2;
          return false;
        }
        return true;
      case TaskName::OneStroke: {
        if (a != Action::Move) return true;
        if (!valid) return !target_[static_cast<std::size_t>(front_of(w))];  // touched the stroke
        const int prev = here - step_of(w);
        w.walls[static_cast<std::size_t>(prev)] = 1;
        target_[static_cast<std::size_t>(prev)] = 1;
        ++progress_;
        return progress_ < denom_;
      }
      case TaskName::Snake:
        return snake_step(w, a, valid);
    }
    return true;
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = static_cast<std::uint64_t>(progress_) * 0x9e3779b97f4a7c15ULL;
    if (task_ == TaskName::Snake) {
      h ^= mix64(static_cast<std::uint64_t>(goal_) + 7);
      for (int cell : body_) h = mix64(h ^ static_cast<std::uint64_t>(cell));
    } else if (!done_.empty()) {
      h ^= done_hash_;
    }
    return h;
  }

 private:
  static int step_of(const WorldState& w) { return row_delta(w.agentDir) * w.width + col_delta(w.agentDir); }
  static int front_of(const WorldState& w) { return w.agent_index() + step_of(w); }

  void credit(int cell, bool achieved) {
    const auto i = static_cast<std::size_t>(cell);
    if (!achieved || !target_[i] || done_[i]) return;
    done_[i] = 1;
    done_hash_ ^= mix64(i + 0x51);
    ++progress_;
  }

  bool snake_step(WorldState& w, Action a, bool valid) {
    if (a != Action::Move) return true;
    if (!valid) {
      // Bumping into the body ends the episode; the border is an ordinary wall.
      const int f = front_of(w);
      for (std::size_t i = 1; i < body_.size(); ++i)
        if (body_[i] == f) return false;
      return true;
    }
    const int head = w.agent_index();
    body_.push_front(head);
    if (head == goal_) {
      w.markers[static_cast<std::size_t>(head)] = 0;
      if (++progress_ >= kSnakeGoal) return false;
    } else {
      w.walls[static_cast<std::size_t>(body_.back())] = 0;
      body_.pop_back();
    }
    if (body_.size() > 1) w.walls[static_cast<std::size_t>(body_[1])] = 1;
    if (head == goal_) {
      std::vector<int> free;
      for (std::size_t i = 0; i < w.walls.size(); ++i)
        if (!w.walls[i] && static_cast<int>(i) != head) free.push_back(static_cast<int>(i));
      if (free.empty()) return false;
      goal_ = free[rng_.below(free.size())];
      w.markers[static_cast<std::size_t>(goal_)] = 1;
    }
    return true;
  }

  TaskName task_;
  int denom_ = 1;
  int progress_ = 0;
  bool failed_ = false;
  int goal_ = -1, key_ = -1, door_ = -1;
  std::vector<std::uint8_t> target_;
  std::vector<std::uint8_t> done_;
  std::uint64_t done_hash_ = 0;
  std::deque<int> body_;
  Rng rng_{0};
};

// ---------------------------------------------------------------------------
// Rollout and evaluation

inline EpisodeResult rollout(const TaskSpec& task, const Bytecode& bc, const WorldState& s0,
                             const ExecLimits& limits = {}) {
  TaskHooks hooks(task, s0);
  ExecOptions opts;
  opts.recordActions = false;
  const EpisodeOutcome o = run_episode(bc, s0, limits, task.crashable, hooks, opts);
  return EpisodeResult{hooks.current_return(), o.steps, o.trajectory.terminal};
}

inline EpisodeResult rollout(const TaskSpec& task, const Program& p, const WorldState& s0,
                             const ExecLimits& limits = {}) {
  return rollout(task, compile(p), s0, limits);
}

/// Mean return over `states`; the program is compiled once.
inline double evaluate(const TaskSpec& task, const Program& p, std::span<const WorldState> states,
                       const ExecLimits& limits = {}) {
  if (states.empty()) throw std::invalid_argument("evaluate needs at least one initial state");
  const Bytecode bc = compile(p);
  double sum = 0.0;
  for (const auto& s : states) sum += rollout(task, bc, s, limits).ret;
  return sum / static_cast<double>(states.size());
}

}  // namespace karel
