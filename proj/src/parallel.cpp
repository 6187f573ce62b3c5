#include "bmlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bm {

namespace {

std::atomic<std::size_t> g_workers{0};

// Nested parallel_for calls run inline so the pool never oversubscribes.
thread_local bool t_inside_worker = false;

}  // namespace

void set_worker_count(std::size_t workers) { g_workers = workers; }

std::size_t worker_count() {
  const std::size_t w = g_workers.load();
  if (w > 0) return w;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min(worker_count(), count);
  if (threads <= 1 || t_inside_worker) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    t_inside_worker = true;
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
    t_inside_worker = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bm
