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

// Hill climbing with restarts over any space given by an initial-program
// sampler and a neighborhood function.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/mutation.hpp"
#include "karel/rng.hpp"
#include "karel/tasks.hpp"

namespace karel {

struct SpaceHandle {
  std::function<Program(Rng&)> init;
  std::function<std::vector<Program>(const Program&, int, Rng&)> neighbors;
};

/// Grammar sampling for initial candidates, subtree regrowth for neighbors.
inline SpaceHandle programmatic_space(const GrammarProbs& probs = {}, const GenConstraints& c = {}) {
  SpaceHandle s;
  s.init = [probs, c](Rng& rng) { return sample_program(rng, probs, c); };
  s.neighbors = [probs, c](const Program& p, int K, Rng& rng) {
    NeighborhoodParams params;
    params.K = K;
    return neighborhood(p, params, rng, probs, c);
  };
  return s;
}

struct SearchConfig {
  int K = 250;
  std::int64_t budget = 1'000'000;
  int numStates = 16;
  std::uint64_t seed = 0;
  bool crashable = false;
  ExecLimits limits{};

  void validate() const {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (numStates < 1) throw std::invalid_argument("numStates must be >= 1");
    limits.validate();
  }
};

struct CurvePoint {
  std::int64_t evaluations = 0;
  double best = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SearchRecord {
  Program bestProgram;
  double bestReturn = 0.0;
  std::vector<CurvePoint> curve;
  int restarts = 0;
  std::int64_t evaluationsUsed = 0;
};

struct ClimbResult {
  Program best;
  double bestReturn = 0.0;
  std::int64_t evaluations = 0;
  bool converged = false;  // false when the budget ran out first
};

/// Counts evaluations against a budget and remembers scores. Scores are
/// deterministic, so a repeated program is looked up rather than rerun; it
/// still costs one evaluation.
template <class Score>
class Evaluator {
 public:
  Evaluator(Score score, std::int64_t budget) : score_(std::move(score)), budget_(budget) {}

  bool exhausted() const { return used_ >= budget_; }
  std::int64_t used() const { return used_; }

  /// Precondition: !exhausted().
  double operator()(const Program& p) {
    ++used_;
    double g;
    if (auto it = cache_.find(p); it != cache_.end()) {
      g = it->second;
    } else {
      g = score_(p);
      if (cache_.size() >= kMaxCache) cache_.clear();
      cache_.emplace(p, g);
    }
    if (!any_ || g > best_) {
      any_ = true;
      best_ = g;
      bestProgram_ = p;
      curve_.push_back({used_, g});
    }
    return g;
  }

  double best() const { return best_; }
  const Program& best_program() const { return bestProgram_; }
  std::vector<CurvePoint>& curve() { return curve_; }

 private:
  static constexpr std::size_t kMaxCache = 1u << 20;
  Score score_;
  std::int64_t budget_;
  std::int64_t used_ = 0;
  bool any_ = false;
  double best_ = -std::numeric_limits<double>::infinity();
  Program bestProgram_;
  std::vector<CurvePoint> curve_;
  std::unordered_map<Program, double, ProgramHash> cache_;
};

/// One climb from `start`. Each round draws the neighborhood of the
/// incumbent once, scores every neighbor and keeps the first one strictly
/// better than anything seen so far in the round. Stops when a round brings
/// no improvement or the budget runs out (mid-round if need be).
template <class Eval>
ClimbResult hill_climb(const SpaceHandle& space, const Program& start, Eval& eval, int K, Rng& rng) {
  ClimbResult r;
  const std::int64_t before = eval.used();
  r.best = start;
  r.bestReturn = eval(start);
  for (;;) {
    if (eval.exhausted()) break;
    const std::vector<Program> nbrs = space.neighbors(r.best, K, rng);
    bool improved = false;
    bool cut = false;
    for (const Program& q : nbrs) {
      if (eval.exhausted()) {
        cut = true;
        break;
      }
      const double g = eval(q);
      if (g > r.bestReturn) {
        r.best = q;
        r.bestReturn = g;
        improved = true;
      }
    }
    if (cut) break;
    if (!improved) {
      r.converged = true;
      break;
    }
  }
  r.evaluations = eval.used() - before;
  return r;
}

/// Restarts climbs from fresh initial candidates until the budget is spent.
template <class Score>
SearchRecord search_with_restarts(const SpaceHandle& space, Score score, int K, std::int64_t budget, Rng& rng) {
  Evaluator<Score> eval(std::move(score), budget);
  int climbs = 0;
  while (!eval.exhausted()) {
    const Program start = space.init(rng);
    hill_climb(space, start, eval, K, rng);
    ++climbs;
  }
  SearchRecord rec;
  rec.bestProgram = eval.best_program();
  rec.bestReturn = eval.best();
  rec.evaluationsUsed = eval.used();
  rec.restarts = climbs - 1;
  rec.curve = std::move(eval.curve());
  if (rec.curve.back().evaluations != rec.evaluationsUsed) rec.curve.push_back({rec.evaluationsUsed, rec.bestReturn});
  return rec;
}

/// Scores a program as its mean return over a fixed state set.
struct TaskScorer {
  TaskSpec task;
  std::vector<WorldState> states;
  ExecLimits limits;

  double operator()(const Program& p) const { return evaluate(task, p, states, limits); }
};

inline TaskScorer make_scorer(const TaskSpec& task, const SearchConfig& cfg) {
  return TaskScorer{task, sample_initial_states(task, cfg.seed, cfg.numStates), cfg.limits};
}

/// One seeded search record on a task. The state set is drawn once from the
/// task's distribution and shared by every restart.
inline SearchRecord search_with_restarts(const SpaceHandle& space, TaskSpec task, const SearchConfig& cfg) {
  cfg.validate();
  task.crashable = cfg.crashable;
  Rng rng(derive_seed(cfg.seed, 0x5ea4c4));
  return search_with_restarts(space, make_scorer(task, cfg), cfg.K, cfg.budget, rng);
}

/// Best return found by a single climb from `start` (no restarts).
inline double g_search(const SpaceHandle& space, TaskSpec task, const Program& start,
                       std::span<const WorldState> states, const SearchConfig& cfg, Rng& rng) {
  cfg.validate();
  task.crashable = cfg.crashable;
  TaskScorer scorer{task, std::vector<WorldState>(states.begin(), states.end()), cfg.limits};
  Evaluator<TaskScorer> eval(std::move(scorer), cfg.budget);
  return hill_climb(space, start, eval, cfg.K, rng).bestReturn;
}

}  // namespace karel
