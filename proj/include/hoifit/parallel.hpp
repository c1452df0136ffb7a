#pragma once
#include <functional>

namespace hoifit {

// Runs fn(i) for i in [0, n). Work is split into `workers` contiguous chunks,
// one thread per chunk. Results must be written to per-index slots: with that
// discipline output is bit-identical for any worker count. The lowest-index
// exception (if any) is rethrown on the calling thread.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace hoifit
