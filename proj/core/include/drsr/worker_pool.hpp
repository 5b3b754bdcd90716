#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace drsr {

/// Worker count from RSR_THREADS, else hardware concurrency (at least 1).
int configured_worker_count();

/// Fixed pool of threads running index loops. Each index is handled by
/// exactly one worker and results go to caller-owned per-index slots, so the
/// outcome never depends on the worker count or on scheduling.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = configured_worker_count());
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int workers() const { return workers_; }

  /// Runs body(i) for i in [0, count). If any calls throw, the exception from
  /// the smallest index is rethrown after all indices finish.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

 private:
  void worker_loop();
  void drain();

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* body_ = nullptr;
  std::vector<std::exception_ptr> errors_;
  std::size_t count_ = 0;
  std::size_t next_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  bool stopping_ = false;
};

}  // namespace drsr
