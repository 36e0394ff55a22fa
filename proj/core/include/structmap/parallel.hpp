#pragma once

#include <cstddef>
#include <functional>

namespace structmap {

/// Caps the number of worker threads used by parallel_for. Zero restores the
/// default (hardware concurrency).
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Calls fn(i) for every i in [begin, end), splitting the range into
/// contiguous blocks across worker threads. fn must only write state owned by
/// index i; callers reduce per-index results afterwards in index order, which
/// keeps results independent of the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace structmap
