#pragma once

#include <functional>

namespace edgemetric {

/// Worker count used by parallel_for. Defaults to EDGEMETRIC_THREADS when set,
/// otherwise the hardware concurrency.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [begin, end), split into contiguous chunks across
/// thread_count() workers. Callers must only write to index-owned outputs so
/// that results do not depend on the schedule.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace edgemetric
