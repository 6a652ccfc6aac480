#pragma once

#include <cstddef>
#include <functional>

namespace amdnet {

/// Worker threads used by parallel_for (process-global, default 1).
void set_worker_threads(int n);
int worker_threads();

/// Runs fn over [0,n) split into contiguous chunks, one per worker. Callers
/// must arrange work so each index writes disjoint data and performs its
/// additions in the same order a sequential loop would; under that contract
/// results are bitwise identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace amdnet
