#pragma once

#include <cstddef>
#include <functional>

namespace recon {

/// Worker count: RECON_THREADS if set (>= 1), else the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
/// exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace recon
