#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace kinrescale {

// Fork-join worker pool. Work is split into fixed contiguous ranges, so any
// routine whose iterations write disjoint outputs produces results independent
// of the thread count; reductions must stay on the caller's side.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads = 0)
      : n_(n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency())) {
    if (n_ < 1) n_ = 1;
  }

  int threads() const { return n_; }

  // fn(begin, end) over [0, n) split into at most threads() contiguous chunks.
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) const {
    if (n == 0) return;
    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(n_), n);
    if (chunks <= 1) {
      fn(0, n);
      return;
    }
    std::vector<std::thread> workers;
    workers.reserve(chunks - 1);
    const std::size_t per = n / chunks, extra = n % chunks;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t end = begin + per + (c < extra ? 1 : 0);
      if (c + 1 == chunks) {
        fn(begin, end);
      } else {
        workers.emplace_back(fn, begin, end);
      }
      begin = end;
    }
    for (auto& w : workers) w.join();
  }

 private:
  int n_;
};

inline void parallel_for(const ThreadPool* pool, std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (pool != nullptr) {
    pool->parallel_for(n, fn);
  } else if (n > 0) {
    fn(0, n);
  }
}

}  // namespace kinrescale
