#include "hvacopt/parallel.hpp"

#include <cstdlib>
#include <string>

namespace hvacopt {

int default_thread_count() {
    if (const char* env = std::getenv("HVACOPT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

WorkerPool::WorkerPool(int threads) {
    if (threads <= 0) threads = default_thread_count();
    for (int i = 1; i < threads; ++i)
        workers_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
}

void WorkerPool::parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    task_ = &fn;
    total_ = n;
    next_ = 0;
    active_ = 0;
    ++generation_;
    wake_.notify_all();

    // The calling thread works too.
    while (next_ < total_) {
        const int idx = next_++;
        lock.unlock();
        fn(idx);
        lock.lock();
    }
    done_.wait(lock, [this] { return active_ == 0 && next_ >= total_; });
    task_ = nullptr;
}

void WorkerPool::worker_loop() {
    std::unique_lock<std::mutex> lock(mutex_);
    unsigned long seen = 0;
    while (true) {
        wake_.wait(lock, [this, seen] {
            return stop_ || (task_ != nullptr && generation_ != seen && next_ < total_);
        });
        if (stop_) return;
        seen = generation_;
        while (task_ != nullptr && next_ < total_) {
            const int idx = next_++;
            const auto* fn = task_;
            ++active_;
            lock.unlock();
            (*fn)(idx);
            lock.lock();
            --active_;
        }
        done_.notify_all();
    }
}

}  // namespace hvacopt
