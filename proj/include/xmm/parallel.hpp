#pragma once

#include <cstddef>
#include <functional>

namespace xmm {

// Worker cap shared by every parallel loop in the library. Defaults to 1.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n) over contiguous blocks. Each index is visited
// exactly once, so callers writing to per-index slots stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace xmm
