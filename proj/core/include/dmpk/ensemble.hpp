#pragma once

#include <cstddef>
#include <functional>

namespace dmpk {

/// Worker count: DMPK_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least one).
std::size_t worker_count();

/// Calls body(p) for p in [0, paths) across worker threads. Each path index
/// is visited exactly once; results must be stored by index so that output
/// is independent of scheduling. The first exception thrown by any body is
/// rethrown after all workers stop.
void for_each_path(std::size_t paths, const std::function<void(std::size_t)>& body);

}  // namespace dmpk
