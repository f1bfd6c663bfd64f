#pragma once

#include <cstddef>
#include <functional>

namespace driftmc {

/// Process-wide worker cap; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write into slot i so the result is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace driftmc
