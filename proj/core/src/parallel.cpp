#include "ephmap/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ephmap {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_threads(int count) { g_workers.store(count < 0 ? 0 : count); }

int worker_threads() {
  int n = g_workers.load();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}

void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = kDefaultBlock;
  const std::size_t num_blocks = (n + block_size - 1) / block_size;
  const int threads = worker_threads();

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };

  if (threads <= 1 || num_blocks <= 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      if (failed.load()) return;
      const std::size_t b = next.fetch_add(1);
      if (b >= num_blocks) return;
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  const std::size_t spawn =
      std::min<std::size_t>(static_cast<std::size_t>(threads), num_blocks);
  std::vector<std::thread> pool;
  pool.reserve(spawn);
  for (std::size_t i = 0; i < spawn; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ephmap
