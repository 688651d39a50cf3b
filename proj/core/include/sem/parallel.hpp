#pragma once

#include <functional>

namespace sem {

/// Run body(i) for i = 0..count-1 distributed over up to `workers` threads.
/// workers <= 1 runs serially.  The first exception thrown by any body is
/// rethrown on the calling thread after all workers join, so results written
/// to preallocated slots stay index-stable regardless of scheduling.
void parallel_for(int count, int workers, const std::function<void(int)>& body);

}  // namespace sem
