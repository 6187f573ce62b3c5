#pragma once

#include <cstddef>
#include <functional>

namespace bm {

// Process-wide worker count used by parallel_for; defaults to the logical core count.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

// Runs body(i) for i in [0, count) on at most worker_count() threads. Callers write
// results into slot i, so the outcome never depends on scheduling. The first
// exception thrown by any body is rethrown after all workers have stopped.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace bm
