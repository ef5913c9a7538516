#pragma once

#include <functional>

namespace ionsim::threading {

/// Thread-count cap from the IONSIM_THREADS environment variable; defaults to
/// 1 (serial). Values below 1 are clamped to 1.
int thread_cap();

/// Runs fn(0..n-1). With a cap above 1 the indices are distributed over
/// worker threads; each index writes only its own output slot, so results are
/// identical to the serial order.
void parallel_for_indexed(int n, const std::function<void(int)>& fn);

} // namespace ionsim::threading
