#pragma once

#include <cstddef>
#include <functional>

namespace rcs {

/// Worker count used by `parallel_for`; 1 means run inline.
void set_worker_threads(int threads);
int worker_threads() noexcept;

/// Run `body(i)` for i in [0, count) over contiguous chunks. Each index is
/// visited exactly once, so callers that write to index-owned slots and
/// reduce afterwards in index order get schedule-independent results.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rcs
