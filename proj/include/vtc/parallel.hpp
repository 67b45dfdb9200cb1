#pragma once

#include <cstdint>
#include <functional>

namespace vtc {

// Worker cap from VTC_THREADS (0 or unset = hardware concurrency).
int worker_count();

// Runs fn(i) for i in [0, n). Items must be independent; each writes its own
// output slot, so results do not depend on the thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)> & fn);

} // namespace vtc
