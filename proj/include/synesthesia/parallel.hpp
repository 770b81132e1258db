#pragma once

#include <cstddef>
#include <functional>

namespace synesthesia {

/// Worker thread count: SYNESTHESIA_THREADS if set (>= 1), else the hardware
/// concurrency. set_thread_count() overrides both for the current process.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Work items are independent; callers that
/// reduce across items do so afterwards in index order, so results do not
/// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace synesthesia
