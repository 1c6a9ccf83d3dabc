#pragma once

#include <cstddef>
#include <functional>

namespace resbound {

/// Worker count used by the batch-parallel kernels. Results never depend on it.
void set_threads(int n);
int threads();

/// Runs fn(chunk) for chunk in [0, n_chunks). Chunks are independent; the
/// first exception (by chunk index) is rethrown after all workers join.
void parallel_for(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

}  // namespace resbound
