#pragma once

#include <cstddef>
#include <functional>

namespace styleproj {

/// Upper bound on worker threads. Initialized from STYLEPROJ_THREADS when set,
/// otherwise from the hardware concurrency.
std::size_t thread_limit();

/// Overrides the limit for the rest of the process; 0 restores the default.
void set_thread_limit(std::size_t limit);

/**
 * Calls fn(i) for every i in [0, count), split into contiguous blocks across
 * up to thread_limit() threads. Each index runs exactly once, so results are
 * independent of scheduling as long as fn(i) only writes to slot i.
 * Exceptions from workers are rethrown on the calling thread.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace styleproj
