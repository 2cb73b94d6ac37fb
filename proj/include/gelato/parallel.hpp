#pragma once

#include <cstddef>
#include <functional>

namespace gelato {

// Worker count: set_thread_count() if called, else GELATO_THREADS, else 1.
int thread_count();
void set_thread_count(int threads);

// Splits [0, count) into contiguous chunks, one per worker. Each index is
// handled by exactly one call, so results that depend only on the index are
// identical for any thread count.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace gelato
