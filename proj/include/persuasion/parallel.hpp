#pragma once

#include <cstddef>
#include <functional>

namespace persuasion {

/// Worker count: PERSUASION_LAB_THREADS when set to a positive integer,
/// otherwise the hardware concurrency.
unsigned worker_count();

/// Calls fn(i) for i in [0, n) across worker threads in contiguous blocks.
/// fn must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t min_block = 64);

} // namespace persuasion
