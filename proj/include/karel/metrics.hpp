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

// Topology estimators for a search space: how far behavior drifts under
// repeated mutation, how often a mutation path returns to its start, and how
// often a single climb reaches a target return.
//
// Every sample owns a seed derived from (master seed, sample index), so the
// estimates do not depend on evaluation order.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/interpreter.hpp"
#include "karel/mutation.hpp"
#include "karel/rng.hpp"
#include "karel/search.hpp"
#include "karel/tasks.hpp"
#include "karel/world.hpp"

namespace karel {

inline constexpr double kZ95 = 1.959963984540054;

struct MetricEstimate {
  double mean = 0.0;
  double ci95Low = 0.0;
  double ci95High = 0.0;
  std::int64_t nSamples = 0;
};

/// Mean with a normal-approximation 95% interval.
inline MetricEstimate mean_estimate(std::span<const double> xs) {
  MetricEstimate e;
  e.nSamples = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double n = static_cast<double>(xs.size());
  e.mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  const double half = xs.size() > 1 ? kZ95 * std::sqrt(ss / (n - 1.0) / n) : 0.0;
  e.ci95Low = e.mean - half;
  e.ci95High = e.mean + half;
  return e;
}

/// Proportion with a Wilson score 95% interval.
inline MetricEstimate rate_estimate(std::int64_t successes, std::int64_t n) {
  MetricEstimate e;
  e.nSamples = n;
  if (n <= 0) return e;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  e.mean = p;
  e.ci95Low = std::min(p, std::max(0.0, centre - half));
  e.ci95High = std::max(p, std::min(1.0, centre + half));
  return e;
}

/// Length of the longest common prefix over the longer length.
inline double rho_similarity(std::span<const Action> a, std::span<const Action> b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  const auto diff = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
  return static_cast<double>(diff.first - a.begin()) / static_cast<double>(longest);
}

inline double rho_similarity(const Trajectory& a, const Trajectory& b) { return rho_similarity(a.actions, b.actions); }

/// Task-independent initial states for the behavior metrics.
inline std::vector<WorldState> metric_states(int count, std::uint64_t seed, const RandomWorldConfig& cfg = {}) {
  std::vector<WorldState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(random_world(rng, cfg));
  }
  return out;
}

struct MetricParams {
  GrammarProbs probs{};
  GenConstraints constraints{};
  ExecLimits limits{};
};

namespace detail {

inline Trajectory trace(const Bytecode& bc, const WorldState& s, const ExecLimits& limits) {
  NullHooks hooks;
  return run_episode(bc, s, limits, false, hooks).trajectory;
}

/// Mutation path rho_0, ..., rho_n of program sample `index`.
inline std::vector<Program> mutation_path(std::uint64_t seed, std::uint64_t index, int n, const MetricParams& mp) {
  Rng rng(derive_seed(seed, index));
  std::vector<Program> path;
  path.reserve(static_cast<std::size_t>(n) + 1);
  path.push_back(sample_program(rng, mp.probs, mp.constraints));
  for (int i = 0; i < n; ++i) path.push_back(mutate(path.back(), rng, mp.probs, mp.constraints));
  return path;
}

}  // namespace detail

/// Behavior similarity for every n in 1..maxMut along the same mutation
/// paths; entry n-1 equals behavior_similarity(n, ...).
/// The sample unit is a program: its similarity averaged over `states`.
inline std::vector<MetricEstimate> behavior_similarity_sweep(int maxMut, int nPrograms,
                                                             std::span<const WorldState> states, std::uint64_t seed,
                                                             const MetricParams& mp = {}) {
  if (maxMut < 1) throw std::invalid_argument("number of mutations must be >= 1");
  if (nPrograms < 1 || states.empty()) throw std::invalid_argument("need at least one program and one state");
  std::vector<std::vector<double>> per(static_cast<std::size_t>(maxMut));
  for (int i = 0; i < nPrograms; ++i) {
    const auto path = detail::mutation_path(seed, static_cast<std::uint64_t>(i), maxMut, mp);
    const Bytecode bc0 = compile(path[0]);
    std::vector<Trajectory> base;
    base.reserve(states.size());
    for (const auto& s : states) base.push_back(detail::trace(bc0, s, mp.limits));
    for (int n = 1; n <= maxMut; ++n) {
      double sum = 0.0;
      const Program& q = path[static_cast<std::size_t>(n)];
      if (q == path[0]) {
        sum = static_cast<double>(states.size());
      } else {
        const Bytecode bc = compile(q);
        for (std::size_t k = 0; k < states.size(); ++k)
          sum += rho_similarity(base[k], detail::trace(bc, states[k], mp.limits));
      }
      per[static_cast<std::size_t>(n - 1)].push_back(sum / static_cast<double>(states.size()));
    }
  }
  std::vector<MetricEstimate> out;
  for (const auto& v : per) out.push_back(mean_estimate(v));
  return out;
}

inline MetricEstimate behavior_similarity(int nMut, int nPrograms, std::span<const WorldState> states,
                                          std::uint64_t seed, const MetricParams& mp = {}) {
  return behavior_similarity_sweep(nMut, nPrograms, states, seed, mp).back();
}

/// Identity rate for every n in 0..maxMut; entry n is for n mutations.
inline std::vector<MetricEstimate> identity_rate_sweep(int maxMut, int nPrograms, std::uint64_t seed,
                                                       const MetricParams& mp = {}) {
  if (maxMut < 0) throw std::invalid_argument("number of mutations must be >= 0");
  if (nPrograms < 1) throw std::invalid_argument("need at least one program");
  std::vector<std::int64_t> hits(static_cast<std::size_t>(maxMut) + 1, 0);
  for (int i = 0; i < nPrograms; ++i) {
    const auto path = detail::mutation_path(seed, static_cast<std::uint64_t>(i), maxMut, mp);
    for (int n = 0; n <= maxMut; ++n)
      if (equals(path[0], path[static_cast<std::size_t>(n)])) ++hits[static_cast<std::size_t>(n)];
  }
  std::vector<MetricEstimate> out;
  for (auto h : hits) out.push_back(rate_estimate(h, nPrograms));
  return out;
}

inline MetricEstimate identity_rate(int nMut, int nPrograms, std::uint64_t seed, const MetricParams& mp = {}) {
  return identity_rate_sweep(nMut, nPrograms, seed, mp).back();
}

struct ConvergenceCurve {
  std::vector<double> gTargets;
  std::vector<MetricEstimate> rates;
};

/// Survival curve of single-climb results over `targets`.
inline ConvergenceCurve convergence_curve(std::span<const double> results, std::span<const double> targets) {
  ConvergenceCurve c;
  c.gTargets.assign(targets.begin(), targets.end());
  for (double t : targets) {
    std::int64_t hits = 0;
    for (double g : results)
      if (g >= t) ++hits;
    c.rates.push_back(rate_estimate(hits, static_cast<std::int64_t>(results.size())));
  }
  return c;
}

/// Best return of one climb per initial program. Initial program i depends
/// only on (seed, i), so runs with different K start from the same programs.
inline std::vector<double> climb_results(const TaskSpec& task, int K, int nInits, std::span<const WorldState> states,
                                         std::uint64_t seed, std::int64_t budget = 1'000'000,
                                         const MetricParams& mp = {}) {
  if (K < 1 || nInits < 1) throw std::invalid_argument("K and nInits must be >= 1");
  const SpaceHandle space = programmatic_space(mp.probs, mp.constraints);
  SearchConfig cfg;
  cfg.K = K;
  cfg.budget = budget;
  cfg.numStates = static_cast<int>(states.size());
  cfg.crashable = task.crashable;
  cfg.limits = mp.limits;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(nInits));
  for (int i = 0; i < nInits; ++i) {
    Rng init(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Program start = sample_program(init, mp.probs, mp.constraints);
    Rng climb(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(K)));
    out.push_back(g_search(space, task, start, states, cfg, climb));
  }
  return out;
}

inline ConvergenceCurve convergence_rate(const TaskSpec& task, int K, int nInits, std::span<const WorldState> states,
                                         std::span<const double> gTargets, std::uint64_t seed,
                                         std::int64_t budget = 1'000'000, const MetricParams& mp = {}) {
  for (double t : gTargets)
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("target returns must lie in [0, 1]");
  const auto results = climb_results(task, K, nInits, states, seed, budget, mp);
  return convergence_curve(results, gTargets);
}

/// Evenly spaced targets 0, 1/(n-1), ..., 1.
inline std::vector<double> target_grid(int n) {
  if (n < 2) throw std::invalid_argument("target grid needs at least two points");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace karel
