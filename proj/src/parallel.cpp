#include "edgemetric/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace edgemetric {
namespace {

int default_threads() {
  if (const char* env = std::getenv("EDGEMETRIC_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& threads_setting() {
  static std::atomic<int> threads{default_threads()};
  return threads;
}

}  // namespace

int thread_count() { return threads_setting().load(); }

void set_thread_count(int threads) {
  threads_setting().store(threads >= 1 ? threads : default_threads());
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi = begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace edgemetric
