#pragma once

#include <cstddef>
#include <functional>

namespace emoflow {

/// Worker count: hardware concurrency, capped by ENGINE_THREADS when set.
unsigned engine_threads();

/// Runs body(i) for i in [0, n). Items must be independent; results are
/// identical for any thread count as long as body only writes slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace emoflow
