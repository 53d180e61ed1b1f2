#pragma once

#include <functional>

namespace vemmg {

/// Process-wide worker count used by parallel_for (default: hardware concurrency).
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n). Iterations must write to disjoint state only;
/// all reductions over the results happen serially at the call site, so
/// results are identical for any thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace vemmg
