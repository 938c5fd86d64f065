#pragma once

#include <cstdint>

namespace sbl {

/// Upper bound on worker threads used by the column-parallel kernels.
/// Values < 1 reset to the hardware default.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results
/// never depend on the number of threads.
template <class Body>
void parallel_for(std::int64_t n, Body&& body) {
#pragma omp parallel for schedule(static) if (n > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    body(i);
  }
}

}  // namespace sbl
