#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace opo {

// Fixed-size pool running index-based batches. Work items write only to
// per-index slots and reductions happen outside in index order, so results
// do not depend on the worker count or on scheduling.
class ThreadPool {
  public:
    // n <= 1 runs everything inline on the calling thread.
    explicit ThreadPool(int n_workers);
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int worker_count() const { return n_workers_; }

    // Blocks until fn(i, worker_id) ran for every i in [0, n). worker_id is
    // in [0, worker_count()); worker-local scratch may be indexed by it.
    void parallel_for(int n, const std::function<void(int, int)>& fn);

  private:
    void worker_loop(int worker_id);

    int n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_work_;
    std::condition_variable cv_done_;
    const std::function<void(int, int)>* fn_ = nullptr;
    int batch_size_ = 0;
    int next_index_ = 0;
    int remaining_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

// Resolves the worker count: explicit request > OPO_NUM_WORKERS env var >
// hardware concurrency.
int resolve_worker_count(int requested);

}  // namespace opo
