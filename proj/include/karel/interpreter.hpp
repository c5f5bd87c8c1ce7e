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

// Programs run as policies with internal state: a program counter plus a
// stack of loop counters. Execution is suspendable after every action, and
// stack depth is bounded by the program's nesting depth.
//
// Tick accounting (shared with any reference evaluator):
//   action                  1 tick, 1 action
//   WHILE condition test    1 tick per test
//   IF / IFELSE test        1 tick
//   REPEAT counter test     1 tick per test (n + 1 tests for R=n)
//   sequencing              free

#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/world.hpp"

namespace karel {

struct ExecLimits {
  std::int64_t maxActions = 10'000;
  std::int64_t maxTicks = 1'000'000;

  void validate() const {
    if (maxActions < 1 || maxTicks < maxActions)
      throw std::invalid_argument("limits need maxActions >= 1 and maxTicks >= maxActions");
  }
};

enum class Terminal : std::uint8_t { ProgramEnded, ActionTimeout, TickTimeout, Crashed, TaskTerminated };

inline constexpr std::string_view to_string(Terminal t) {
  switch (t) {
    case Terminal::ProgramEnded: return "ProgramEnded";
    case Terminal::ActionTimeout: return "ActionTimeout";
    case Terminal::TickTimeout: return "TickTimeout";
    case Terminal::Crashed: return "Crashed";
    case Terminal::TaskTerminated: return "TaskTerminated";
  }
  return "?";
}

inline Terminal terminal_from_string(std::string_view s) {
  for (auto t : {Terminal::ProgramEnded, Terminal::ActionTimeout, Terminal::TickTimeout, Terminal::Crashed,
                 Terminal::TaskTerminated})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown terminal '" + std::string(s) + "'");
}

struct Trajectory {
  std::vector<Action> actions;
  Terminal terminal = Terminal::ProgramEnded;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct ExecOptions {
  /// Keep the action sequence. Task rollouts only need the step count.
  bool recordActions = true;
  /// Detect a repeated (world, interpreter, task) state and jump straight to
  /// the outcome the full run would reach. Outcomes are identical either way.
  bool fastForwardCycles = true;
};

struct EpisodeOutcome {
  Trajectory trajectory;
  std::int64_t steps = 0;  // actions executed
  WorldState final;
};

/// Task callbacks. `on_action` runs after every executed action (valid or
/// not); returning false ends the episode with TaskTerminated. A task that
/// keeps state must fold everything that affects its future behaviour into
/// `fingerprint`, so that cycle detection never merges distinct states.
struct NullHooks {
  bool on_action(WorldState&, Action, bool /*valid*/) { return true; }
  std::uint64_t fingerprint() const { return 0; }
};

// ---------------------------------------------------------------------------
// Bytecode

enum class Op : std::uint8_t { Act, Branch, WhileEnter, WhileTest, Jump, RepeatInit, RepeatTest, End };

struct Instr {
  Op op = Op::End;
  Action action = Action::Move;
  Cond cond{};
  std::int32_t arg = 0;     // jump target, repeat count or while slot
  std::int32_t target = 0;  // jump target for WhileTest
};

struct Bytecode {
  std::vector<Instr> code;
  int whileSlots = 0;
  int maxRepeatDepth = 0;
};

namespace detail {

class Compiler {
 public:
  Bytecode compile(const Program& p) {
    emit_stmt(p.body, 0);
    out_.code.push_back(Instr{Op::End});
    return std::move(out_);
  }

 private:
  int here() const { return static_cast<int>(out_.code.size()); }
  int emit(Instr i) {
    out_.code.push_back(i);
    return here() - 1;
  }

  void emit_stmt(const Stmt& s, int repeat_depth) {
    switch (s.kind()) {
      case StmtKind::Act:
        emit({Op::Act, s.action()});
        break;
      case StmtKind::Seq:
        emit_stmt(s.first(), repeat_depth);
        emit_stmt(s.second(), repeat_depth);
        break;
      case StmtKind::If: {
        const int br = emit({Op::Branch, Action::Move, s.cond()});
        emit_stmt(s.body(), repeat_depth);
        out_.code[static_cast<std::size_t>(br)].arg = here();
        break;
      }
      case StmtKind::IfElse: {
        const int br = emit({Op::Branch, Action::Move, s.cond()});
        emit_stmt(s.body(), repeat_depth);
        const int jmp = emit({Op::Jump});
        out_.code[static_cast<std::size_t>(br)].arg = here();
        emit_stmt(s.else_body(), repeat_depth);
        out_.code[static_cast<std::size_t>(jmp)].arg = here();
        break;
      }
      case StmtKind::While: {
        const int slot = out_.whileSlots++;
        emit({Op::WhileEnter, Action::Move, {}, slot});
        const int test = emit({Op::WhileTest, Action::Move, s.cond(), slot});
        emit_stmt(s.body(), repeat_depth);
        emit({Op::Jump, Action::Move, {}, test});
        out_.code[static_cast<std::size_t>(test)].target = here();
        break;
      }
      case StmtKind::Repeat: {
        out_.maxRepeatDepth = std::max(out_.maxRepeatDepth, repeat_depth + 1);
        emit({Op::RepeatInit, Action::Move, {}, s.count()});
        const int test = emit({Op::RepeatTest});
        emit_stmt(s.body(), repeat_depth + 1);
        emit({Op::Jump, Action::Move, {}, test});
        out_.code[static_cast<std::size_t>(test)].arg = here();
        break;
      }
    }
  }

  Bytecode out_;
};

}  // namespace detail

inline Bytecode compile(const Program& p) { return detail::Compiler{}.compile(p); }

// ---------------------------------------------------------------------------
// Execution

namespace detail {

struct Snapshot {
  std::vector<std::uint8_t> walls;
  std::vector<std::uint8_t> markers;
  int row = 0, col = 0;
  Direction dir = Direction::North;
  std::int32_t pc = 0;
  std::vector<std::int32_t> counters;
  std::uint64_t fingerprint = 0;
  std::int64_t actions = 0;
  std::int64_t ticks = 0;
};

struct CycleEntry {
  Action action;
  std::int64_t ticksBefore;
};

}  // namespace detail

template <class Hooks>
EpisodeOutcome run_episode(const Bytecode& bc, WorldState world, const ExecLimits& limits, bool crashable,
                           Hooks& hooks, const ExecOptions& opts = {}) {
  EpisodeOutcome out;
  std::vector<Action>& actions = out.trajectory.actions;

  std::int32_t pc = 0;
  std::int64_t ticks = 0;
  std::int64_t steps = 0;
  std::vector<std::int32_t> counters;
  counters.reserve(static_cast<std::size_t>(bc.maxRepeatDepth));
  std::vector<std::int64_t> while_mark(static_cast<std::size_t>(bc.whileSlots), -1);

  // Brent-style cycle search over states observed right after each action.
  bool detect = opts.fastForwardCycles;
  detail::Snapshot snap;
  bool have_snap = false;
  std::int64_t power = 1;
  std::vector<detail::CycleEntry> log;

  // After a cycle is found: stop once `steps` reaches `stop_at` and report
  // `forced`, appending `pending` full cycles of actions first.
  std::int64_t stop_at = -1;
  Terminal forced = Terminal::ProgramEnded;
  std::int64_t tick_limit = limits.maxTicks;

  auto finish = [&](Terminal t) {
    out.trajectory.terminal = t;
    out.steps = steps;
    out.final = std::move(world);
    return out;
  };

  auto take_snapshot = [&] {
    snap.walls = world.walls;
    snap.markers = world.markers;
    snap.row = world.agentRow;
    snap.col = world.agentCol;
    snap.dir = world.agentDir;
    snap.pc = pc;
    snap.counters = counters;
    snap.fingerprint = hooks.fingerprint();
    snap.actions = steps;
    snap.ticks = ticks;
    have_snap = true;
    log.clear();
  };

  auto matches_snapshot = [&] {
    return pc == snap.pc && world.agentRow == snap.row && world.agentCol == snap.col && world.agentDir == snap.dir &&
           counters == snap.counters && world.markers == snap.markers && world.walls == snap.walls &&
           hooks.fingerprint() == snap.fingerprint;
  };

  for (;;) {
    const Instr& ins = bc.code[static_cast<std::size_t>(pc)];
    switch (ins.op) {
      case Op::End:
        return finish(Terminal::ProgramEnded);

      case Op::Jump:
        pc = ins.arg;
        break;

      case Op::WhileEnter:
        while_mark[static_cast<std::size_t>(ins.arg)] = -1;
        ++pc;
        break;

      case Op::WhileTest: {
        if (ticks >= tick_limit) return finish(Terminal::TickTimeout);
        ++ticks;
        if (!evaluate(world, ins.cond)) {
          pc = ins.target;
          break;
        }
        auto& mark = while_mark[static_cast<std::size_t>(ins.arg)];
        if (mark == steps) {
          // A full iteration ran without acting: nothing can change any more,
          // so the loop spins until the tick limit.
          return finish(Terminal::TickTimeout);
        }
        mark = steps;
        ++pc;
        break;
      }

      case Op::Branch:
        if (ticks >= tick_limit) return finish(Terminal::TickTimeout);
        ++ticks;
        pc = evaluate(world, ins.cond) ? pc + 1 : ins.arg;
        break;

      case Op::RepeatInit:
        counters.push_back(ins.arg);
        ++pc;
        break;

      case Op::RepeatTest: {
        if (ticks >= tick_limit) return finish(Terminal::TickTimeout);
        ++ticks;
        auto& n = counters.back();
        if (n > 0) {
          --n;
          ++pc;
        } else {
          counters.pop_back();
          pc = ins.arg;
        }
        break;
      }

      case Op::Act: {
        if (steps == stop_at) return finish(forced);
        if (ticks >= tick_limit) return finish(Terminal::TickTimeout);
        const std::int64_t ticks_before = ticks;
        ++ticks;
        if (steps >= limits.maxActions) return finish(Terminal::ActionTimeout);
        const bool valid = apply_action(world, ins.action, crashable);
        ++steps;
        if (opts.recordActions) actions.push_back(ins.action);
        ++pc;
        const bool keep_going = hooks.on_action(world, ins.action, valid);
        if (world.crashed) return finish(Terminal::Crashed);
        if (!keep_going) return finish(Terminal::TaskTerminated);

        if (!detect) break;
        log.push_back({ins.action, ticks_before});
        if (!have_snap) {
          take_snapshot();
          break;
        }
        if (matches_snapshot()) {
          // The run is periodic from here on with period `lam` actions and
          // `period_ticks` ticks. Work out where a full run would stop.
          const auto lam = static_cast<std::int64_t>(log.size());
          const std::int64_t period_ticks = ticks - snap.ticks;
          const std::int64_t room_actions = limits.maxActions - steps;
          const std::int64_t room_ticks = limits.maxTicks - ticks;
          // The j-th future action starts its tick at ticks + k*period + rel[j].
          auto rel = [&](std::int64_t j) { return log[static_cast<std::size_t>(j)].ticksBefore - snap.ticks; };
          const std::int64_t last = rel(lam - 1);
          std::int64_t k = 0;
          if (room_ticks - last > 0) k = (room_ticks - last + period_ticks - 1) / period_ticks;
          std::int64_t j = 0;
          while (j < lam && rel(j) < room_ticks - k * period_ticks) ++j;
          const std::int64_t by_ticks = k * lam + j;
          const std::int64_t by_actions = std::max<std::int64_t>(room_actions, 0);
          const std::int64_t total = std::min(by_ticks, by_actions);
          forced = by_ticks <= by_actions ? Terminal::TickTimeout : Terminal::ActionTimeout;

          const std::int64_t full = total / lam;
          if (opts.recordActions) {
            actions.reserve(actions.size() + static_cast<std::size_t>(total));
            for (std::int64_t f = 0; f < full; ++f)
              for (const auto& e : log) actions.push_back(e.action);
          }
          steps += full * lam;
          // Replay the partial cycle for the exact final world state.
          stop_at = steps + (total - full * lam);
          detect = false;
          tick_limit = INT64_MAX;
          break;
        }
        if (static_cast<std::int64_t>(log.size()) == power) {
          take_snapshot();
          power *= 2;
        }
        break;
      }
    }
  }
}

template <class Hooks>
EpisodeOutcome run_episode(const Program& p, const WorldState& w0, const ExecLimits& limits, bool crashable,
                           Hooks& hooks, const ExecOptions& opts = {}) {
  return run_episode(compile(p), w0, limits, crashable, hooks, opts);
}

inline EpisodeOutcome run_episode(const Program& p, const WorldState& w0, const ExecLimits& limits = {},
                                  bool crashable = false, const ExecOptions& opts = {}) {
  NullHooks hooks;
  return run_episode(compile(p), w0, limits, crashable, hooks, opts);
}

}  // namespace karel
