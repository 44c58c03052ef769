#pragma once

#include <cstddef>
#include <functional>

namespace bdlp {

/// Worker count: hardware concurrency, capped by the BDLP_THREADS
/// environment variable when set.
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Work items
/// must write only to their own slot; results are then independent of
/// scheduling. The first exception thrown by any item is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bdlp
