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

// Experiment driver.
//
//   karel_search sample  --n 10 --seed 3
//   karel_search eval    --task seeder --program "DEF run m( ... m)"
//   karel_search search  --tasks maze,harvester --num-seeds 8 --budget 100000 --out-dir runs/hc
//   karel_search metrics --mode convergence --task maze --ks 10,250,1000
//
// Any option can also come from a key=value file given with --config; flags
// given on the command line win. Worker threads: KAREL_WORKERS (default: all
// cores).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "karel/io.hpp"
#include "karel/karel.hpp"

namespace {

using namespace karel;

// ---------------------------------------------------------------------------
// Options that can be filled from a config file.

template <class T>
T from_text(const std::string& s) {
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("not a boolean: " + s);
  } else {
    std::istringstream in(s);
    T v{};
    if (!(in >> v) || !(in >> std::ws).eof()) throw std::invalid_argument("bad value: " + s);
    return v;
  }
}

template <class T>
std::vector<T> list_from_text(const std::string& s) {
  std::vector<T> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(from_text<T>(item));
  }
  return out;
}

template <class T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) return v;
  else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_same_v<T, double>) return fmt(v);
  else return std::to_string(v);
}

template <class T>
std::string to_text(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + to_text(v[i]);
  return out;
}

class Options {
 public:
  explicit Options(ConfigMap file) : file_(std::move(file)) {}

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& key, T& var, const std::string& desc) {
    if (auto it = file_.find(key); it != file_.end()) {
      if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>)
        var = list_from_text<typename T::value_type>(it->second);
      else
        var = from_text<T>(it->second);
      used_.push_back(key);
    }
    keys_[app].push_back({key, [&var] { return to_text(var); }});
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* o;
    if constexpr (std::is_same_v<T, bool>) o = app->add_flag(flag, var, desc);
    else o = app->add_option(flag, var, desc)->capture_default_str();
    if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string>) o->delimiter(',');
    return o;
  }

  void check_unknown() const {
    for (const auto& [k, v] : file_) {
      bool known = false;
      for (const auto& [app, list] : keys_)
        for (const auto& e : list) known = known || e.first == k;
      if (!known) throw std::invalid_argument("unknown config key '" + k + "'");
    }
  }

  ConfigMap resolved(CLI::App* app) const {
    ConfigMap out;
    // Output locations stay out of the header so reruns elsewhere match.
    for (const auto& [k, get] : keys_.at(app))
      if (k != "out" && k != "out_dir") out[k] = get();
    return out;
  }

 private:
  ConfigMap file_;
  std::vector<std::string> used_;
  std::map<CLI::App*, std::vector<std::pair<std::string, std::function<std::string()>>>> keys_;
};

ConfigMap config_from_argv(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return read_config(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return read_config(a.substr(9));
  }
  return {};
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else write_file_atomic(path, content);
}

std::vector<TaskName> parse_tasks(const std::vector<std::string>& names) {
  std::vector<TaskName> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.insert(out.end(), kAllTasks.begin(), kAllTasks.end());
    } else {
      out.push_back(task_from_id(n));
    }
  }
  if (out.empty()) throw std::invalid_argument("no task given");
  return out;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  int n = 1;
  std::uint64_t seed = 0;
  int max_depth = 4;
  int max_chain = 6;
  int max_length = 45;
  bool stats = false;
  std::string out;
};

std::string run_sample(const SampleArgs& a, const ConfigMap& resolved) {
  GenConstraints c{a.max_depth, a.max_chain, a.max_length};
  c.validate();
  Rng rng(a.seed);
  SamplerStats st;
  std::string body;
  for (int i = 0; i < a.n; ++i) body += print(sample_program(rng, {}, c, &st)) + "\n";
  std::string out = describe("sample", resolved);
  if (!a.stats) return out + body;

  // Rule frequency report over every expansion drawn, rejected draws included.
  const GrammarProbs probs;
  out += "category,rule,expected,observed,count\n";
  auto block = [&](std::string_view cat, auto names, const auto& expected, const auto& counts) {
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    for (std::size_t i = 0; i < counts.size(); ++i)
      out += std::string(cat) + "," + std::string(names(i)) + "," + fmt(expected[i]) + "," +
             fmt(total > 0 ? static_cast<double>(counts[i]) / total : 0.0) + "," + std::to_string(counts[i]) + "\n";
  };
  static constexpr std::array<std::string_view, 6> kStmt = {"WHILE", "IF", "IFELSE", "REPEAT", "seq", "action"};
  block("statement", [](std::size_t i) { return kStmt[i]; }, probs.stmt, st.stmt);
  block("first_statement", [](std::size_t i) { return kStmt[i]; }, probs.stmt, st.first);
  block("condition", [](std::size_t i) { return i == 0 ? "plain" : "negated"; }, probs.cond, st.cond);
  block("percept", [](std::size_t i) { return kPerceptNames[i]; }, probs.percept, st.percept);
  block("action", [](std::size_t i) { return kActionNames[i]; }, probs.action, st.action);
  std::array<double, kMaxRepeat + 1> uniform{};
  uniform.fill(1.0 / (kMaxRepeat + 1));
  block("count", [](std::size_t i) { return std::to_string(i); }, uniform, st.count);
  return out;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string program;
  std::string program_file;
  std::string task = "seeder";
  std::uint64_t seed = 0;
  int num_states = 16;
  bool crashable = false;
  std::int64_t max_actions = 10'000;
  std::string out;
};

std::string read_program(const EvalArgs& a) {
  if (!a.program.empty()) return a.program;
  if (a.program_file.empty()) throw std::invalid_argument("give --program or --program-file");
  std::ifstream in(a.program_file);
  if (!in) throw std::runtime_error("cannot read " + a.program_file);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') return t;
  }
  throw std::invalid_argument("no program in " + a.program_file);
}

std::string run_eval(const EvalArgs& a, const ConfigMap& resolved) {
  const Program p = parse(read_program(a));
  const TaskSpec task = make_task(task_from_id(a.task), a.crashable);
  ExecLimits limits;
  limits.maxActions = a.max_actions;
  limits.validate();
  if (a.num_states < 1) throw std::invalid_argument("num_states must be >= 1");
  const auto states = sample_initial_states(task, a.seed, a.num_states);
  const Bytecode bc = compile(p);
  std::string out = describe("eval", resolved);
  out += "state,return,steps,terminal\n";
  double sum = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const EpisodeResult r = rollout(task, bc, states[i], limits);
    sum += r.ret;
    out += std::to_string(i) + "," + fmt(r.ret) + "," + std::to_string(r.steps) + "," +
           std::string(to_string(r.terminal)) + "\n";
  }
  out += "mean," + fmt(sum / static_cast<double>(states.size())) + ",,\n";
  return out;
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
  std::vector<std::string> tasks = {"maze"};
  std::vector<std::uint64_t> seeds = {0};
  int num_seeds = 0;
  int k = 250;
  std::int64_t budget = 1'000'000;
  int num_states = 16;
  bool crashable = false;
  std::string out_dir;
};

int run_search(const SearchArgs& a, const ConfigMap& resolved) {
  const auto tasks = parse_tasks(a.tasks);
  std::vector<std::uint64_t> seeds = a.seeds;
  if (a.num_seeds > 0) {
    seeds.clear();
    for (int i = 0; i < a.num_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  SearchConfig base;
  base.K = a.k;
  base.budget = a.budget;
  base.numStates = a.num_states;
  base.crashable = a.crashable;
  base.validate();

  const int jobs = static_cast<int>(tasks.size() * seeds.size());
  std::vector<SearchRecord> records(static_cast<std::size_t>(jobs));
  const SpaceHandle space = programmatic_space();
  parallel_for(jobs, worker_count(), [&](int j) {
    SearchConfig cfg = base;
    cfg.seed = seeds[static_cast<std::size_t>(j) % seeds.size()];
    records[static_cast<std::size_t>(j)] =
        search_with_restarts(space, make_task(tasks[static_cast<std::size_t>(j) / seeds.size()]), cfg);
  });

  const std::string head = describe("search", resolved);
  std::string jsonl, curves = head + "task,seed,evaluations,episodes,best_return\n";
  std::string summary = head + "task,n_seeds,mean,stderr,ci_low,ci_high\n";
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    std::vector<double> finals;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const SearchRecord& r = records[t * seeds.size() + s];
      auto j = to_json(r);
      nlohmann::ordered_json line;
      line["task"] = std::string(task_id(tasks[t]));
      line["seed"] = seeds[s];
      line["k"] = a.k;
      line["budget"] = a.budget;
      line["num_states"] = a.num_states;
      line["crashable"] = a.crashable;
      for (auto& [key, v] : j.items()) line[key] = v;
      jsonl += line.dump() + "\n";
      for (const auto& p : r.curve)
        curves += std::string(task_id(tasks[t])) + "," + std::to_string(seeds[s]) + "," +
                  std::to_string(p.evaluations) + "," + std::to_string(p.evaluations * a.num_states) + "," +
                  fmt(p.best) + "\n";
      finals.push_back(r.bestReturn);
    }
    const MetricEstimate e = mean_estimate(finals);
    const double se = finals.size() > 1 ? (e.ci95High - e.mean) / kZ95 : 0.0;
    summary += std::string(task_id(tasks[t])) + "," + std::to_string(finals.size()) + "," + fmt(e.mean) + "," +
               fmt(se) + "," + fmt(e.ci95Low) + "," + fmt(e.ci95High) + "\n";
  }
  if (!a.out_dir.empty()) {
    const std::filesystem::path dir(a.out_dir);
    write_file_atomic(dir / "records.jsonl", jsonl);
    write_file_atomic(dir / "curves.csv", curves);
    write_file_atomic(dir / "summary.csv", summary);
  }
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
  std::string mode = "behavior";
  std::uint64_t seed = 0;
  int programs = 200;
  int states = 8;
  int n_mut_max = 10;
  std::string task = "maze";
  std::vector<int> ks = {10, 250, 1000};
  int inits = 500;
  int targets = 21;
  std::int64_t budget = 1'000'000;
  bool crashable = false;
  std::string out;
};

std::string run_metrics(const MetricsArgs& a, const ConfigMap& resolved) {
  std::string out = describe("metrics", resolved);
  auto row = [&](int n, const MetricEstimate& e, std::string_view metric) {
    out += std::to_string(n) + "," + fmt(e.mean) + "," + fmt(e.ci95Low) + "," + fmt(e.ci95High) + "," +
           std::string(metric) + "\n";
  };
  if (a.mode == "behavior") {
    const auto states = metric_states(a.states, derive_seed(a.seed, 1));
    const auto est = behavior_similarity_sweep(a.n_mut_max, a.programs, states, derive_seed(a.seed, 2));
    out += "n_mutations,mean,ci_low,ci_high,metric\n";
    for (int n = 1; n <= a.n_mut_max; ++n) row(n, est[static_cast<std::size_t>(n - 1)], "behavior_similarity");
  } else if (a.mode == "identity") {
    const auto est = identity_rate_sweep(a.n_mut_max, a.programs, derive_seed(a.seed, 2));
    out += "n_mutations,mean,ci_low,ci_high,metric\n";
    for (int n = 1; n <= a.n_mut_max; ++n) row(n, est[static_cast<std::size_t>(n)], "identity_rate");
  } else if (a.mode == "convergence") {
    const TaskSpec task = make_task(task_from_id(a.task), a.crashable);
    const auto states = sample_initial_states(task, derive_seed(a.seed, 1), a.states);
    const auto grid = target_grid(a.targets);
    std::vector<ConvergenceCurve> curves(a.ks.size());
    parallel_for(static_cast<int>(a.ks.size()), worker_count(), [&](int i) {
      curves[static_cast<std::size_t>(i)] =
          convergence_rate(task, a.ks[static_cast<std::size_t>(i)], a.inits, states, grid, derive_seed(a.seed, 3),
                           a.budget);
    });
    out += "task,K,g_target,rate,ci_low,ci_high\n";
    for (std::size_t i = 0; i < curves.size(); ++i)
      for (std::size_t t = 0; t < grid.size(); ++t) {
        const auto& e = curves[i].rates[t];
        out += a.task + "," + std::to_string(a.ks[i]) + "," + fmt(grid[t]) + "," + fmt(e.mean) + "," +
               fmt(e.ci95Low) + "," + fmt(e.ci95High) + "\n";
      }
  } else {
    throw std::invalid_argument("mode must be behavior, identity or convergence");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hill-climbing search over Karel programs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key=value file with option defaults");

  try {
    Options opts(config_from_argv(argc, argv));

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "draw programs from the grammar");
    opts.add(sample, "n", sa.n, "number of programs");
    opts.add(sample, "seed", sa.seed, "RNG seed");
    opts.add(sample, "max_depth", sa.max_depth, "nesting depth limit");
    opts.add(sample, "max_chain", sa.max_chain, "statements per block limit");
    opts.add(sample, "max_length", sa.max_length, "token length limit");
    opts.add(sample, "stats", sa.stats, "append a rule-frequency report");
    opts.add(sample, "out", sa.out, "output file (default stdout)");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "mean return of one program on a task");
    opts.add(eval, "program", ea.program, "program text");
    opts.add(eval, "program_file", ea.program_file, "file holding the program");
    opts.add(eval, "task", ea.task, "task id");
    opts.add(eval, "seed", ea.seed, "initial-state seed");
    opts.add(eval, "num_states", ea.num_states, "number of initial states");
    opts.add(eval, "crashable", ea.crashable, "invalid actions end the episode");
    opts.add(eval, "max_actions", ea.max_actions, "action timeout");
    opts.add(eval, "out", ea.out, "output file (default stdout)");

    SearchArgs ra;
    auto* search = app.add_subcommand("search", "hill climbing with restarts");
    opts.add(search, "tasks", ra.tasks, "task ids, comma separated, or 'all'");
    opts.add(search, "seeds", ra.seeds, "seeds, comma separated");
    opts.add(search, "num_seeds", ra.num_seeds, "use seeds 0..N-1 instead of --seeds");
    opts.add(search, "k", ra.k, "neighborhood size");
    opts.add(search, "budget", ra.budget, "program evaluations per seed");
    opts.add(search, "num_states", ra.num_states, "initial states per evaluation");
    opts.add(search, "crashable", ra.crashable, "invalid actions end the episode");
    opts.add(search, "out_dir", ra.out_dir, "directory for records.jsonl, curves.csv, summary.csv");

    MetricsArgs ma;
    auto* metrics = app.add_subcommand("metrics", "topology estimators");
    opts.add(metrics, "mode", ma.mode, "behavior | identity | convergence")
        ->check(CLI::IsMember({"behavior", "identity", "convergence"}));
    opts.add(metrics, "seed", ma.seed, "master seed");
    opts.add(metrics, "programs", ma.programs, "sampled initial programs (behavior, identity)");
    opts.add(metrics, "states", ma.states, "initial states");
    opts.add(metrics, "n_mut_max", ma.n_mut_max, "largest number of mutations");
    opts.add(metrics, "task", ma.task, "task id (convergence)");
    opts.add(metrics, "ks", ma.ks, "neighborhood sizes (convergence)");
    opts.add(metrics, "inits", ma.inits, "initial candidates (convergence)");
    opts.add(metrics, "targets", ma.targets, "points on the target-return grid");
    opts.add(metrics, "budget", ma.budget, "evaluation cap per climb");
    opts.add(metrics, "crashable", ma.crashable, "invalid actions end the episode");
    opts.add(metrics, "out", ma.out, "output file (default stdout)");

    opts.check_unknown();
    app.parse(argc, argv);

    if (sample->parsed()) emit(sa.out, run_sample(sa, opts.resolved(sample)));
    if (eval->parsed()) emit(ea.out, run_eval(ea, opts.resolved(eval)));
    if (search->parsed()) return run_search(ra, opts.resolved(search));
    if (metrics->parsed()) emit(ma.out, run_metrics(ma, opts.resolved(metrics)));
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
