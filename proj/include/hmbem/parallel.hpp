#ifndef HMBEM_PARALLEL_HPP
#define HMBEM_PARALLEL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace hmbem {

// Global worker cap, set once by the CLI (--threads). 0 = hardware default.
inline int& thread_cap() {
  static int cap = 0;
  return cap;
}

// Runs body(i) for i in [0, n). Work items must write to disjoint state;
// scheduling order is unspecified.
inline void parallel_for(long n, const std::function<void(long)>& body) {
  int workers = thread_cap() > 0
                    ? thread_cap()
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers == 1 || n < 2) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&]() {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace hmbem

#endif
