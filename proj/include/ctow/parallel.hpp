#pragma once

#include <cstddef>
#include <functional>

namespace ctow {

// Worker cap: CTOW_THREADS if set (min 1), hardware concurrency otherwise.
int thread_budget();

// Runs fn(0) .. fn(count-1), possibly on several threads. Each index writes
// only its own output slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace ctow
