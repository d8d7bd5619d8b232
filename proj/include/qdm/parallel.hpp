#pragma once

#include <cstddef>
#include <functional>

namespace qdm {

// Worker count: explicit value if > 0, else QDM_THREADS, else hardware.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n). Each index is owned by one worker, so
// results written per index are independent of the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace qdm
