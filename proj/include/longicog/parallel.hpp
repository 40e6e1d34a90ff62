#pragma once

#include <cstddef>
#include <functional>

namespace longicog {

/// Resolves a worker count: `requested` if non-zero, else LONGICOG_THREADS if
/// set to a positive integer, else the hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception by index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace longicog
