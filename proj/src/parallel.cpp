// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/parallel.hpp"

#include <atomic>

namespace lgmsep {

namespace {
std::atomic<int> g_threads{0};
}

int num_threads() { return g_threads.load(std::memory_order_relaxed); }

void set_num_threads(int n) {
  g_threads.store(std::max(0, n), std::memory_order_relaxed);
}

}  // namespace lgmsep
