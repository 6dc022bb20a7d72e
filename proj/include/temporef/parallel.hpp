#pragma once

#include <cstddef>
#include <functional>

namespace temporef {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Indices are split
// into contiguous blocks, so any per-index result is independent of the
// thread count. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace temporef
