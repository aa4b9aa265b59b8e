#pragma once

#include <functional>

namespace fadrf {

/// Worker count used by parallel_for. Defaults to the FADRF_THREADS
/// environment variable, else the hardware concurrency.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, n). Each index is visited exactly once; calls
/// made from inside a running parallel_for execute serially on the caller.
/// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace fadrf
