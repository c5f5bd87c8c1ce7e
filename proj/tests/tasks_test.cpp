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


#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "karel/tasks.hpp"
#include "test_util.hpp"

namespace karel {
namespace {

int count_markers(const WorldState& s) {
  int n = 0;
  for (auto m : s.markers) n += m;
  return n;
}

std::vector<int> open_cells(const WorldState& s) {
  std::vector<int> v;
  for (int i = 0; i < static_cast<int>(s.walls.size()); ++i)
    if (!s.walls[static_cast<std::size_t>(i)]) v.push_back(i);
  return v;
}

// Open cells reachable from `from` by 4-neighbour steps.
std::set<int> reachable(const WorldState& s, int from) {
  std::set<int> seen = {from};
  std::queue<int> q;
  q.push(from);
  while (!q.empty()) {
    const int c = q.front();
    q.pop();
    for (int d : {-s.width, s.width, -1, 1}) {
      const int n = c + d;
      if (!s.walls[static_cast<std::size_t>(n)] && seen.insert(n).second) q.push(n);
    }
  }
  return seen;
}

TEST(TaskSpec, GridSizes) {
  const int sizes[10][2] = {{12, 12}, {8, 8}, {12, 12}, {12, 12}, {8, 8}, {14, 22}, {8, 8}, {8, 8}, {8, 8}, {8, 8}};
  for (std::size_t i = 0; i < kAllTasks.size(); ++i) {
    const TaskSpec t = make_task(kAllTasks[i]);
    EXPECT_EQ(t.height, sizes[i][0]);
    EXPECT_EQ(t.width, sizes[i][1]);
    const WorldState s = sample_initial(t, 0, 0);
    EXPECT_EQ(s.height, t.height);
    EXPECT_EQ(s.width, t.width);
    EXPECT_NO_THROW(s.validate());
  }
}

TEST(TaskSpec, CliNames) {
  for (TaskName t : kAllTasks) EXPECT_EQ(task_from_id(task_id(t)), t);
  EXPECT_EQ(task_from_id("doorkey"), TaskName::DoorKey);
  EXPECT_THROW(task_from_id("DoorKey"), std::invalid_argument);
}

TEST(SampleInitial, Deterministic) {
  for (TaskName t : kAllTasks) {
    const TaskSpec spec = make_task(t);
    EXPECT_EQ(sample_initial(spec, 5, 3), sample_initial(spec, 5, 3));
    bool differs = false;
    for (std::uint64_t i = 1; i < 10; ++i) differs = differs || !(sample_initial(spec, 5, 0) == sample_initial(spec, 5, i));
    if (t != TaskName::CleanHouse) { EXPECT_TRUE(differs) << task_id(t); }
  }
}

TEST(SampleInitial, StairClimber) {
  const TaskSpec t = make_task(TaskName::StairClimber);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const WorldState s = sample_initial(t, 1, i);
    for (int r = 1; r < 11; ++r)
      for (int c = 1; c < 11; ++c) EXPECT_EQ(s.wall(r, c), r + c >= 12);
    const int goal = s.extra.cells.at(0);
    const int gr = goal / 12, gc = goal % 12;
    EXPECT_EQ(gr + gc, 11);
    EXPECT_EQ(s.agentRow + s.agentCol, 11);
    EXPECT_GT(gc, s.agentCol);
    EXPECT_EQ(s.marker_count(gr, gc), 1);
    EXPECT_EQ(count_markers(s), 1);
  }
}

TEST(SampleInitial, MazeIsPerfect) {
  const TaskSpec t = make_task(TaskName::Maze);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const WorldState s = sample_initial(t, 2, i);
    const auto open = open_cells(s);
    int edges = 0;
    for (int c : open) {
      if (!s.walls[static_cast<std::size_t>(c + 1)]) ++edges;
      if (!s.walls[static_cast<std::size_t>(c + s.width)]) ++edges;
    }
    // Connected with |E| = |V| - 1: a tree, so every path is unique.
    EXPECT_EQ(edges, static_cast<int>(open.size()) - 1);
    EXPECT_EQ(reachable(s, s.agent_index()).size(), open.size());
    const int goal = s.extra.cells.at(0);
    EXPECT_NE(goal, s.agent_index());
    EXPECT_EQ(s.markers[static_cast<std::size_t>(goal)], 1);
    EXPECT_EQ(count_markers(s), 1);
    EXPECT_GE(open.size(), 10u);
  }
}

TEST(SampleInitial, TopOff) {
  const TaskSpec t = make_task(TaskName::TopOff);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const WorldState s = sample_initial(t, 3, i);
    EXPECT_EQ(s.agentRow, 10);
    EXPECT_EQ(s.agentCol, 1);
    EXPECT_EQ(s.agentDir, Direction::East);
    int bottom = 0;
    for (int c = 1; c < 11; ++c) bottom += s.marker_count(10, c);
    EXPECT_GE(bottom, 1);
    EXPECT_EQ(count_markers(s), bottom);
    EXPECT_EQ(static_cast<int>(s.extra.cells.size()), bottom);
    EXPECT_EQ(open_cells(s).size(), 100u);
  }
}

TEST(SampleInitial, BottomRowStarts) {
  for (TaskName name : {TaskName::FourCorners, TaskName::Harvester}) {
    const TaskSpec t = make_task(name);
    std::set<int> cols;
    for (std::uint64_t i = 0; i < 60; ++i) {
      const WorldState s = sample_initial(t, 4, i);
      EXPECT_EQ(s.agentRow, t.height - 2);
      cols.insert(s.agentCol);
    }
    EXPECT_GT(cols.size(), 3u);
  }
}

TEST(SampleInitial, HarvesterHasMarkerEverywhere) {
  const WorldState s = sample_initial(make_task(TaskName::Harvester), 0, 7);
  for (int c : open_cells(s)) EXPECT_EQ(s.markers[static_cast<std::size_t>(c)], 1);
  EXPECT_EQ(count_markers(s), 36);
}

TEST(SampleInitial, CleanHouse) {
  const WorldState fixture = parse_map(testing::read_fixture("cleanhouse.map"));
  const WorldState layout = parse_map(kCleanHouseMap);
  EXPECT_EQ(fixture, layout);
  const auto open = open_cells(layout);
  EXPECT_EQ(reachable(layout, layout.agent_index()).size(), open.size());
  for (std::uint64_t i = 0; i < 30; ++i) {
    const WorldState s = sample_initial(make_task(TaskName::CleanHouse), 9, i);
    EXPECT_EQ(s.walls, layout.walls);
    EXPECT_EQ(s.agent_index(), layout.agent_index());
    EXPECT_EQ(s.agentDir, layout.agentDir);
    EXPECT_EQ(count_markers(s), 10);
    for (int c : open) {
      if (!s.markers[static_cast<std::size_t>(c)]) continue;
      EXPECT_EQ(s.markers[static_cast<std::size_t>(c)], 1);
      const bool by_wall = s.walls[static_cast<std::size_t>(c - 1)] || s.walls[static_cast<std::size_t>(c + 1)] ||
                           s.walls[static_cast<std::size_t>(c - s.width)] ||
                           s.walls[static_cast<std::size_t>(c + s.width)];
      EXPECT_TRUE(by_wall);
    }
  }
}

TEST(SampleInitial, DoorKey) {
  const TaskSpec t = make_task(TaskName::DoorKey);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const WorldState s = sample_initial(t, 5, i);
    for (int r = 1; r < 7; ++r) EXPECT_TRUE(s.wall(r, 4));
    const int key = s.extra.cells.at(0), goal = s.extra.cells.at(1), door = s.extra.cells.at(2);
    EXPECT_LT(key % 8, 4);
    EXPECT_GT(goal % 8, 4);
    EXPECT_EQ(door % 8, 4);
    EXPECT_LT(s.agentCol, 4);
    EXPECT_NE(key, s.agent_index());
    EXPECT_EQ(count_markers(s), 2);
    // The right chamber is sealed until the door opens.
    EXPECT_EQ(reachable(s, s.agent_index()).count(goal), 0u);
    WorldState opened = s;
    opened.walls[static_cast<std::size_t>(door)] = 0;
    EXPECT_EQ(reachable(opened, s.agent_index()).count(goal), 1u);
  }
}

TEST(SampleInitial, EmptyGrids) {
  for (TaskName name : {TaskName::OneStroke, TaskName::Seeder, TaskName::Snake}) {
    const TaskSpec t = make_task(name);
    for (std::uint64_t i = 0; i < 20; ++i) {
      const WorldState s = sample_initial(t, 6, i);
      EXPECT_EQ(open_cells(s).size(), 36u);
      EXPECT_EQ(count_markers(s), name == TaskName::Snake ? 1 : 0);
      if (name == TaskName::Snake) { EXPECT_NE(s.extra.cells.at(0), s.agent_index()); }
    }
  }
}

// ---------------------------------------------------------------------------
// Rewards on hand-built states

double ret(TaskName name, const char* program, const WorldState& s, bool crashable = false) {
  return rollout(make_task(name, crashable), parse(program), s).ret;
}

EpisodeResult run(TaskName name, const char* program, const WorldState& s) {
  return rollout(make_task(name), parse(program), s);
}

WorldState empty8(int r, int c, Direction d) {
  WorldState s(8, 8);
  s.place_agent(r, c, d);
  return s;
}

TEST(Rewards, SeederNothingPlaced) {
  const TaskSpec t = make_task(TaskName::Seeder);
  for (std::uint64_t i = 0; i < 8; ++i) {
    EXPECT_EQ(rollout(t, parse("DEF run m( turnLeft m)"), sample_initial(t, 0, i)).ret, 0.0);
    EXPECT_EQ(rollout(t, parse("DEF run m( move m)"), sample_initial(t, 0, i)).ret, 0.0);
  }
}

TEST(Rewards, SeederCountsCellsThatHeldOneMarker) {
  const WorldState s = empty8(3, 3, Direction::East);
  EXPECT_DOUBLE_EQ(ret(TaskName::Seeder, "DEF run m( putMarker m)", s), 1.0 / 36);
  EXPECT_DOUBLE_EQ(ret(TaskName::Seeder, "DEF run m( putMarker putMarker move putMarker m)", s), 2.0 / 36);
}

TEST(Rewards, SeederFullSweepScoresOne) {
  // Boustrophedon over the 6x6 interior starting in the top-left corner.
  const WorldState s = empty8(1, 1, Direction::East);
  const char* sweep =
      "DEF run m( REPEAT R=3 r( REPEAT R=5 r( putMarker move r) putMarker turnRight move turnRight "
      "REPEAT R=5 r( putMarker move r) putMarker turnLeft move turnLeft r) m)";
  const EpisodeResult r = run(TaskName::Seeder, sweep, s);
  EXPECT_DOUBLE_EQ(r.ret, 1.0);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
}

TEST(Rewards, HarvesterPicks) {
  const WorldState s = sample_initial(make_task(TaskName::Harvester), 0, 0);
  EXPECT_DOUBLE_EQ(ret(TaskName::Harvester, "DEF run m( pickMarker m)", s), 1.0 / 36);
  EXPECT_DOUBLE_EQ(ret(TaskName::Harvester, "DEF run m( pickMarker pickMarker m)", s), 1.0 / 36);
  EXPECT_DOUBLE_EQ(ret(TaskName::Harvester, "DEF run m( pickMarker putMarker pickMarker m)", s), 1.0 / 36);
}

TEST(Rewards, TopOffNeedsExactlyOneExtraMarker) {
  WorldState s(12, 12);
  s.place_agent(10, 1, Direction::East);
  s.set_markers(10, 1, 1);
  s.set_markers(10, 3, 1);
  s.extra.cells = {s.index(10, 1), s.index(10, 3)};
  EXPECT_DOUBLE_EQ(ret(TaskName::TopOff, "DEF run m( putMarker m)", s), 0.5);
  EXPECT_DOUBLE_EQ(ret(TaskName::TopOff, "DEF run m( move putMarker m)", s), 0.0);
  const EpisodeResult both = run(TaskName::TopOff, "DEF run m( putMarker move move putMarker move m)", s);
  EXPECT_DOUBLE_EQ(both.ret, 1.0);
  EXPECT_EQ(both.terminal, Terminal::TaskTerminated);
  EXPECT_EQ(both.steps, 4);
}

TEST(Rewards, FourCorners) {
  WorldState s(12, 12);
  s.place_agent(10, 5, Direction::East);
  const char* go =
      "DEF run m( REPEAT R=4 r( WHILE c( frontIsClear c) w( move w) putMarker turnLeft r) m)";
  const EpisodeResult r = run(TaskName::FourCorners, go, s);
  EXPECT_DOUBLE_EQ(r.ret, 1.0);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
  EXPECT_DOUBLE_EQ(ret(TaskName::FourCorners, "DEF run m( WHILE c( frontIsClear c) w( move w) putMarker m)", s), 0.25);
  // A cell that already got its marker keeps counting after a second one.
  EXPECT_DOUBLE_EQ(
      ret(TaskName::FourCorners, "DEF run m( WHILE c( frontIsClear c) w( move w) putMarker putMarker m)", s), 0.25);
  EXPECT_DOUBLE_EQ(ret(TaskName::FourCorners, "DEF run m( putMarker m)", s), 0.0);
}

TEST(Rewards, MazeGoal) {
  WorldState s = parse_map("5 5\n#####\n#>..#\n###.#\n#...#\n#####\n");
  s.set_markers(3, 1, 1);
  s.extra.cells = {s.index(3, 1)};
  const char* solve = "DEF run m( move move turnRight move move turnRight move move m)";
  const EpisodeResult r = run(TaskName::Maze, solve, s);
  EXPECT_DOUBLE_EQ(r.ret, 1.0);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
  EXPECT_DOUBLE_EQ(ret(TaskName::Maze, "DEF run m( move move turnRight move move m)", s), 0.0);
}

TEST(Rewards, StairClimber) {
  WorldState s = sample_initial(make_task(TaskName::StairClimber), 0, 0);
  // Put the agent at (10,1) and the goal two steps up the stairs at (8,3).
  s.markers.assign(s.markers.size(), 0);
  s.place_agent(10, 1, Direction::North);
  s.set_markers(8, 3, 1);
  s.extra.cells = {s.index(8, 3)};
  const char* climb = "DEF run m( move turnRight move turnLeft move turnRight move m)";
  const EpisodeResult up = run(TaskName::StairClimber, climb, s);
  EXPECT_DOUBLE_EQ(up.ret, 1.0);
  EXPECT_EQ(up.terminal, Terminal::TaskTerminated);
  // (9,1) is in the band, (8,1) is not.
  const EpisodeResult off = run(TaskName::StairClimber, "DEF run m( move move m)", s);
  EXPECT_DOUBLE_EQ(off.ret, -1.0);
  EXPECT_EQ(off.steps, 2);
  EXPECT_EQ(off.terminal, Terminal::TaskTerminated);
  EXPECT_DOUBLE_EQ(ret(TaskName::StairClimber, "DEF run m( move m)", s), 0.0);
  // Bumping into the stairs is a harmless no-op unless the variant is crashable.
  EXPECT_DOUBLE_EQ(ret(TaskName::StairClimber, "DEF run m( turnRight move m)", s), 0.0);
  EXPECT_DOUBLE_EQ(ret(TaskName::StairClimber, "DEF run m( turnRight turnRight move m)", s, true), -1.0);
}

TEST(Rewards, DoorKey) {
  WorldState s(8, 8);
  for (int r = 1; r < 7; ++r) s.set_wall(r, 4);
  s.place_agent(3, 2, Direction::East);
  const int key = s.index(3, 3), goal = s.index(3, 6), door = s.index(3, 4);
  s.markers[static_cast<std::size_t>(key)] = 1;
  s.markers[static_cast<std::size_t>(goal)] = 1;
  s.extra.cells = {key, goal, door};
  EXPECT_DOUBLE_EQ(ret(TaskName::DoorKey, "DEF run m( move move move m)", s), 0.0);
  EXPECT_DOUBLE_EQ(ret(TaskName::DoorKey, "DEF run m( move pickMarker m)", s), 0.5);
  const EpisodeResult r = run(TaskName::DoorKey, "DEF run m( move pickMarker move move move move m)", s);
  EXPECT_DOUBLE_EQ(r.ret, 1.0);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
  EXPECT_EQ(r.steps, 5);
}

TEST(Rewards, OneStroke) {
  const WorldState s = empty8(3, 3, Direction::East);
  EXPECT_DOUBLE_EQ(ret(TaskName::OneStroke, "DEF run m( turnLeft m)", s), 1.0 / 36);
  EXPECT_DOUBLE_EQ(ret(TaskName::OneStroke, "DEF run m( move move m)", s), 3.0 / 36);
  // Turning back into the stroke ends the episode.
  const EpisodeResult back =
      run(TaskName::OneStroke, "DEF run m( move turnLeft turnLeft move turnLeft move m)", s);
  EXPECT_DOUBLE_EQ(back.ret, 2.0 / 36);
  EXPECT_EQ(back.terminal, Terminal::TaskTerminated);
  EXPECT_EQ(back.steps, 4);
  // The border is an ordinary wall.
  const EpisodeResult edge = run(TaskName::OneStroke, "DEF run m( move move move move move turnLeft m)", s);
  EXPECT_DOUBLE_EQ(edge.ret, 4.0 / 36);
  EXPECT_EQ(edge.terminal, Terminal::ProgramEnded);
}

TEST(Rewards, OneStrokeFullTourScoresOne) {
  const WorldState s = empty8(1, 1, Direction::East);
  const char* sweep =
      "DEF run m( REPEAT R=3 r( REPEAT R=5 r( move r) turnRight move turnRight REPEAT R=5 r( move r) turnLeft move "
      "turnLeft r) m)";
  const EpisodeResult r = run(TaskName::OneStroke, sweep, s);
  EXPECT_DOUBLE_EQ(r.ret, 1.0);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
}

TEST(Rewards, Snake) {
  WorldState s = empty8(3, 1, Direction::East);
  s.set_markers(3, 3, 1);
  s.extra.cells = {s.index(3, 3)};
  s.extra.seed = 1234;
  TaskHooks hooks(make_task(TaskName::Snake), s);
  const auto out = run_episode(parse("DEF run m( move move m)"), s, {}, false, hooks);
  EXPECT_DOUBLE_EQ(hooks.current_return(), 1.0 / 20);
  // The marker moved to a new free cell and the old head cell is now body.
  EXPECT_EQ(out.final.marker_count(3, 3), 0);
  int markers = 0;
  for (auto m : out.final.markers) markers += m;
  EXPECT_EQ(markers, 1);
  EXPECT_TRUE(out.final.wall(3, 2));
  EXPECT_FALSE(out.final.wall(3, 1));
}

TEST(Rewards, SnakeBodyCollisionEnds) {
  WorldState s = empty8(3, 1, Direction::East);
  s.set_markers(3, 2, 1);
  s.extra.cells = {s.index(3, 2)};
  s.extra.seed = 99;
  // After eating at (3,2) the body is two long; turning around bumps it.
  const EpisodeResult r = run(TaskName::Snake, "DEF run m( move turnLeft turnLeft move move m)", s);
  EXPECT_EQ(r.terminal, Terminal::TaskTerminated);
  EXPECT_EQ(r.steps, 4);
  EXPECT_DOUBLE_EQ(r.ret, 1.0 / 20);
}

// ---------------------------------------------------------------------------
// Properties over sampled programs

struct Watch {
  TaskHooks inner;
  std::vector<double> seen;
  bool on_action(WorldState& w, Action a, bool valid) {
    const bool keep = inner.on_action(w, a, valid);
    seen.push_back(inner.current_return());
    return keep;
  }
  std::uint64_t fingerprint() const { return inner.fingerprint(); }
};

TEST(Properties, ReturnBoundsAndQuanta) {
  Rng rng(10);
  for (int i = 0; i < 3000; ++i) {
    const TaskName name = kAllTasks[static_cast<std::size_t>(i) % kAllTasks.size()];
    const TaskSpec t = make_task(name, i % 3 == 0);
    const EpisodeResult r = rollout(t, sample_program(rng), sample_initial(t, 1, static_cast<std::uint64_t>(i)));
    if (name == TaskName::StairClimber) {
      EXPECT_TRUE(r.ret == -1.0 || (r.ret >= 0.0 && r.ret <= 1.0));
    } else {
      EXPECT_GE(r.ret, 0.0);
      EXPECT_LE(r.ret, 1.0);
    }
    if (name == TaskName::DoorKey) { EXPECT_TRUE(r.ret == 0.0 || r.ret == 0.5 || r.ret == 1.0); }
    EXPECT_LE(r.steps, 10000);
  }
}

TEST(Properties, MonotoneAccounting) {
  Rng rng(11);
  for (TaskName name : {TaskName::Harvester, TaskName::Seeder, TaskName::CleanHouse, TaskName::OneStroke,
                        TaskName::TopOff, TaskName::FourCorners, TaskName::DoorKey, TaskName::Snake}) {
    const TaskSpec t = make_task(name);
    for (int i = 0; i < 300; ++i) {
      const WorldState s0 = sample_initial(t, 2, static_cast<std::uint64_t>(i));
      Watch w{TaskHooks(t, s0), {}};
      ExecOptions opts;
      opts.fastForwardCycles = false;
      run_episode(compile(sample_program(rng)), s0, {}, false, w, opts);
      for (std::size_t k = 1; k < w.seen.size(); ++k) ASSERT_GE(w.seen[k], w.seen[k - 1]) << task_id(name);
    }
  }
}

TEST(Properties, CrashableNeverBeatsStandard) {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const TaskName name = kAllTasks[static_cast<std::size_t>(i) % kAllTasks.size()];
    const Program p = sample_program(rng);
    const WorldState s0 = sample_initial(make_task(name), 3, static_cast<std::uint64_t>(i));
    EXPECT_LE(rollout(make_task(name, true), p, s0).ret, rollout(make_task(name, false), p, s0).ret)
        << task_id(name) << " " << print(p);
  }
}

TEST(Evaluate, MeanOfRollouts) {
  const TaskSpec t = make_task(TaskName::Seeder);
  const Program p = parse("DEF run m( putMarker m)");
  const auto states = sample_initial_states(t, 0, 4);
  EXPECT_DOUBLE_EQ(evaluate(t, p, std::span(states).first(1)), rollout(t, p, states[0]).ret);
  EXPECT_DOUBLE_EQ(evaluate(t, p, states), 1.0 / 36);
  EXPECT_THROW(evaluate(t, p, std::span<const WorldState>{}), std::invalid_argument);

  // One state solved, one not: mean 0.5.
  const TaskSpec maze = make_task(TaskName::Maze);
  WorldState a = parse_map("3 5\n#####\n#>..#\n#####\n");
  a.set_markers(1, 2, 1);
  a.extra.cells = {a.index(1, 2)};
  WorldState b = a;
  b.agentDir = Direction::West;
  const std::vector<WorldState> two = {a, b};
  EXPECT_DOUBLE_EQ(evaluate(maze, parse("DEF run m( move m)"), two), 0.5);
}

TEST(Evaluate, HandPickedSolutionsRunCleanly) {
  for (const char* file : {"hc_solutions.tsv", "latent_solutions.tsv"}) {
    for (const auto& row : testing::read_programs(file)) {
      const TaskSpec t = make_task(task_from_id(row.task));
      const double g = evaluate(t, parse(row.text), sample_initial_states(t, 0, 8));
      EXPECT_GE(g, 0.0) << row.task;
      EXPECT_LE(g, 1.0) << row.task;
    }
  }
}

}  // namespace
}  // namespace karel
