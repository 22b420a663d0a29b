#pragma once

#include <cstddef>
#include <functional>

namespace goar {

// Worker count: GOAR_WORKERS if set and positive, otherwise the hardware
// concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, n). Iterations must be independent; results are
// expected to be written to pre-sized slots so that output never depends on
// scheduling. Nested calls run serially on the calling thread. The first
// exception thrown by any iteration is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace goar
