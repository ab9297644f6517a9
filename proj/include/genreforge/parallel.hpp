/// @file parallel.hpp
/// @brief Index-parallel loop capped by GENREFORGE_THREADS.

#pragma once

#include <cstddef>
#include <functional>

namespace genreforge {

/// Worker count: GENREFORGE_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Each index runs exactly once; callers write
/// results into slot i so output order never depends on scheduling.
/// The first exception thrown by any fn is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace genreforge
