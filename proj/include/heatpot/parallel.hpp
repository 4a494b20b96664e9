#pragma once

#include <cstddef>
#include <functional>

namespace heatpot {

/// Global worker count used by parallel_for (default 1 = serial).
void set_worker_count(int n);
int worker_count();

/// Run fn(i) for i in [0, n). With more than one worker the index range is
/// split into contiguous chunks; fn must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace heatpot
