#include "probe_bench/parallel.hpp"

#include <cstdlib>
#include <limits>
#include <mutex>
#include <string>

namespace probe_bench {

int default_workers() {
  if (const char* env = std::getenv("PROBE_BENCH_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(Index n, int workers, const std::function<void(Index)>& fn) {
  if (n <= 0) return;
  const auto threads = static_cast<Index>(std::max(1, workers)) < n ? std::max(1, workers) : static_cast<int>(n);
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex error_mutex;
  Index error_index = std::numeric_limits<Index>::max();
  std::exception_ptr error;
  std::atomic<bool> failed{false};

  auto body = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const Index i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace probe_bench
