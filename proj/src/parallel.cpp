#include "volterra/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace volterra {

void for_each_batch(int batches, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, batches));
  if (threads == 1) {
    for (int b = 0; b < batches; ++b) body(b);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int b; (b = next.fetch_add(1)) < batches;) body(b);
      } catch (...) {
        errors[t] = std::current_exception();
        next = batches;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace volterra
