#include "gelato/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gelato {

namespace {

std::atomic<int> configured_threads{0};

int env_threads() {
  const char* raw = std::getenv("GELATO_THREADS");
  if (raw == nullptr) return 1;
  try {
    return std::max(1, std::stoi(raw));
  } catch (...) {
    return 1;
  }
}

}  // namespace

int thread_count() {
  int t = configured_threads.load();
  return t > 0 ? t : env_threads();
}

void set_thread_count(int threads) { configured_threads = std::max(0, threads); }

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
  if (workers <= 1) {
    if (count > 0) body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gelato
