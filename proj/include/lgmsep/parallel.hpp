// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_PARALLEL_HPP
#define LGMSEP_PARALLEL_HPP

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lgmsep {

// Global worker cap. 0 means "use the OpenMP default". Set once from the CLI
// before any kernel runs; 1 gives bit-exact single-threaded execution.
int num_threads();
void set_num_threads(int n);

// Data-parallel loop over [0, n). Work items must write to disjoint slots;
// cross-item reductions are done serially by the caller afterwards so that
// results do not depend on the thread count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  int workers = num_threads();
#ifdef _OPENMP
  if (workers != 1 && n > 1) {
    if (workers == 0) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) fn(i);
    } else {
#pragma omp parallel for schedule(static) num_threads(workers)
      for (int i = 0; i < n; ++i) fn(i);
    }
    return;
  }
#endif
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace lgmsep

#endif  // LGMSEP_PARALLEL_HPP
