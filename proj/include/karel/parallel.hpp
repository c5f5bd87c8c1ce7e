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


// Index-parallel loops with deterministic output slots.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace karel {

/// KAREL_WORKERS if set, else the hardware thread count.
inline int worker_count() {
  if (const char* env = std::getenv("KAREL_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
    throw std::invalid_argument("KAREL_WORKERS must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs job(i) for i in [0, n) on up to `workers` threads. Results go to
/// per-index slots, so output order never depends on scheduling. The first
/// exception thrown by a job is rethrown after all threads join.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    for (int i; (i = next++) < n;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int t = std::min(workers, n);
  std::vector<std::thread> pool;
  for (int i = 1; i < t; ++i) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace karel
