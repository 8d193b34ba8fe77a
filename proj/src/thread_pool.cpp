#include "opo/thread_pool.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace opo {

ThreadPool::ThreadPool(int n_workers) : n_workers_(n_workers < 1 ? 1 : n_workers) {
    threads_.reserve(n_workers_ > 1 ? n_workers_ : 0);
    for (int w = 1; w < n_workers_; ++w)
        threads_.emplace_back([this, w] { worker_loop(w); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop(int worker_id) {
    uint64_t seen = 0;
    for (;;) {
        const std::function<void(int, int)>* fn = nullptr;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            fn = fn_;
        }
        for (;;) {
            int i;
            {
                std::lock_guard<std::mutex> lock(mutex_);
                if (next_index_ >= batch_size_) break;
                i = next_index_++;
            }
            (*fn)(i, worker_id);
            std::lock_guard<std::mutex> lock(mutex_);
            if (--remaining_ == 0) cv_done_.notify_all();
        }
    }
}

void ThreadPool::parallel_for(int n, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    if (n_workers_ == 1) {
        for (int i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        fn_ = &fn;
        batch_size_ = n;
        next_index_ = 0;
        remaining_ = n;
        ++generation_;
    }
    cv_work_.notify_all();
    // The calling thread acts as worker 0.
    for (;;) {
        int i;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (next_index_ >= batch_size_) break;
            i = next_index_++;
        }
        fn(i, 0);
        std::lock_guard<std::mutex> lock(mutex_);
        if (--remaining_ == 0) cv_done_.notify_all();
    }
    std::unique_lock<std::mutex> lock(mutex_);
    cv_done_.wait(lock, [&] { return remaining_ == 0; });
}

int resolve_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OPO_NUM_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
            throw std::invalid_argument("OPO_NUM_WORKERS is not a positive integer");
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace opo
