#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gravidec {

// Worker count: --jobs / explicit argument wins, then GRAVIDEC_JOBS, then
// hardware concurrency.
inline unsigned default_jobs() {
  if (const char* env = std::getenv("GRAVIDEC_JOBS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

// Deterministic parallel map: results are indexed, and any reduction the
// caller performs over the returned vector happens in index order, so the
// result does not depend on the number of workers.  The first exception
// thrown by any worker is rethrown on the calling thread after the join.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& body) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load(std::memory_order_relaxed)) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned k = std::min<std::size_t>(jobs, n);
  pool.reserve(k);
  for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Chunked deterministic sum: partial sums are formed over fixed-size index
// chunks (independent of worker count) and combined in chunk order.
template <class Fn>
double parallel_sum(std::size_t n, std::size_t chunk, unsigned jobs, Fn&& term) {
  if (n == 0) return 0.0;
  if (chunk == 0) chunk = 1;
  const std::size_t m = (n + chunk - 1) / chunk;
  std::vector<double> partial(m, 0.0);
  parallel_for(m, jobs, [&](std::size_t c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[c] = s;
  });
  double total = 0.0, comp = 0.0;  // Kahan, in chunk order
  for (double p : partial) {
    double y = p - comp;
    double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  return total;
}

}  // namespace gravidec
