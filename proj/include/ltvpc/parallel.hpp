#pragma once

#include <functional>

namespace ltvpc {

/// Worker cap: LTV_PC_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Runs fn(0..count-1) across workers. Items must be independent; results
/// are deterministic regardless of the worker count. The first exception is
/// rethrown on the calling thread.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace ltvpc
