#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "probe_bench/types.hpp"

namespace probe_bench {

/// Worker count from PROBE_BENCH_WORKERS, else hardware concurrency (>= 1).
int default_workers();

/// Runs fn(0..n-1) on up to `workers` threads. Tasks are claimed from a shared
/// counter, so results must be written to per-index slots. If any task throws,
/// the exception of the lowest failing index is rethrown after all workers
/// stop.
void parallel_for(Index n, int workers, const std::function<void(Index)>& fn);

}  // namespace probe_bench
