#ifndef HVACOPT_PARALLEL_HPP
#define HVACOPT_PARALLEL_HPP

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hvacopt {

/// Worker count from the HVACOPT_THREADS environment variable, falling back
/// to the hardware concurrency.
int default_thread_count();

/// Minimal fork-join pool. parallel_for blocks until every index is done;
/// tasks must write only to their own slots, which keeps results independent
/// of scheduling.
class WorkerPool {
public:
    explicit WorkerPool(int threads = 0);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void parallel_for(int n, const std::function<void(int)>& fn);
    int size() const { return static_cast<int>(workers_.size()) + 1; }

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(int)>* task_ = nullptr;
    int total_ = 0;
    int next_ = 0;
    int active_ = 0;
    unsigned long generation_ = 0;
    bool stop_ = false;
};

}  // namespace hvacopt

#endif
