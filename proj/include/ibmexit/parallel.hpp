#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ibmexit {

// Splits n replicates into `blocks` contiguous ranges and evaluates
// fn(block, begin, end) for each, on up to hardware_concurrency threads.
// Results come back indexed by block, so any reduction done in block order is
// independent of thread count and scheduling.
template <class Result, class Fn>
std::vector<Result> run_blocks(std::uint64_t n, unsigned blocks, Fn&& fn, unsigned max_threads = 0) {
  blocks = std::max(1u, blocks);
  std::vector<Result> results(blocks);
  unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, blocks);
  std::atomic<unsigned> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (unsigned b = next++; b < blocks; b = next++) {
      try {
        const std::uint64_t begin = n * b / blocks;
        const std::uint64_t end = n * (b + 1) / blocks;
        results[b] = fn(b, begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// Streaming mean/variance (Welford) with Chan's merge.
struct MeanAccumulator {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const MeanAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stderr_of_mean() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

}  // namespace ibmexit
