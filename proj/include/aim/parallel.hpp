#pragma once

#include <cstddef>
#include <functional>

namespace aim {

/// Number of worker threads used by parallel loops. Defaults to the hardware
/// concurrency; results never depend on this value.
std::size_t worker_count();
void set_worker_count(std::size_t workers);

/// Runs fn(i) for i in [0, count). Each index is processed exactly once; the
/// caller stores results by index so reductions stay order-independent.
/// Nested calls from inside a worker run inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace aim
