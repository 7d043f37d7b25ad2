#pragma once

#include <cstddef>
#include <functional>

namespace polyrand {

/// Worker count used by parallel_for. Results never depend on it.
void set_jobs(unsigned jobs);
unsigned jobs();

/// Runs body(i) for i in [0, n). Each index is executed exactly once; callers
/// write into slot i of a preallocated buffer so output order is fixed.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Fixed chunking used by every sampler: chunk count depends only on n.
struct Chunking {
  std::size_t n = 0;
  std::size_t chunks = 0;
  std::size_t begin(std::size_t c) const { return c * n / chunks; }
  std::size_t end(std::size_t c) const { return (c + 1) * n / chunks; }
};

Chunking make_chunking(std::size_t n, std::size_t max_chunks = 64, std::size_t min_chunk = 16);

}  // namespace polyrand
