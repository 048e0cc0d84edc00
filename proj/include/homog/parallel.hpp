#pragma once

#include <cstddef>
#include <functional>

namespace homog {

/// Logical core count (at least 1).
std::size_t default_threads();

/// Run body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into slot i, so reductions
/// done afterwards in index order are independent of the thread count. If any
/// body throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace homog
