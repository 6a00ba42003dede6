#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace refine {

/// Worker count: REFINE_LAB_THREADS when set and positive, otherwise the
/// hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("REFINE_LAB_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates `fn(begin, end)` on fixed-size blocks of [0, n) and returns the
/// per-block results in block order. Block boundaries do not depend on the
/// worker count, so any order-sensitive reduction over the result is
/// reproducible across thread settings.
template <typename T, typename Fn>
std::vector<T> map_blocks(std::size_t n, std::size_t block, Fn fn, unsigned workers = worker_count()) {
  block = std::max<std::size_t>(block, 1);
  const std::size_t blocks = (n + block - 1) / block;
  std::vector<T> out(blocks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      for (std::size_t b = next++; b < blocks; b = next++) {
        const std::size_t begin = b * block;
        out[b] = fn(begin, std::min(n, begin + block));
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = blocks;
    }
  };
  const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  if (spawn <= 1) {
    run();
    if (error) std::rethrow_exception(error);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(spawn - 1);
  for (unsigned i = 1; i < spawn; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace refine
