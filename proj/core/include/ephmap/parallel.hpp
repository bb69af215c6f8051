#pragma once

#include <cstddef>
#include <functional>

namespace ephmap {

// Process-wide worker count used by the block helpers. 0 = hardware
// concurrency. Thread count never changes results: work is cut into
// fixed-size blocks and any order-sensitive combination happens block by
// block on the calling thread.
void set_worker_threads(int count);
int worker_threads();

// Runs fn(block_index, begin, end) over [0, n) cut into blocks of
// block_size. Blocks may run on any thread in any order, so fn must only
// write to per-block or per-index slots.
void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn);

inline constexpr std::size_t kDefaultBlock = 1024;

}  // namespace ephmap
