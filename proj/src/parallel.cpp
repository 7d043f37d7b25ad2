#include "polyrand/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace polyrand {

namespace {
std::atomic<unsigned> g_jobs{1};
}

void set_jobs(unsigned jobs) { g_jobs = std::max(1u, jobs); }
unsigned jobs() { return g_jobs; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(g_jobs, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Chunking make_chunking(std::size_t n, std::size_t max_chunks, std::size_t min_chunk) {
  Chunking c;
  c.n = n;
  c.chunks = std::clamp<std::size_t>(n / std::max<std::size_t>(min_chunk, 1), 1, max_chunks);
  return c;
}

}  // namespace polyrand
