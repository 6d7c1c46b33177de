#include "wcad/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace wcad {
namespace {

thread_local bool tl_in_parallel = false;

class Pool {
  public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    int size() const { return size_; }

    void resize(int n) {
        if (n < 1) n = 1;
        std::lock_guard<std::mutex> outer(run_mutex_);
        shutdown();
        size_ = n;
        start();
    }

    // Runs body over [0, n) split into contiguous chunks, one per worker.
    void run(size_t n, const std::function<void(size_t, size_t)>& body) {
        std::lock_guard<std::mutex> outer(run_mutex_);
        int workers = size_;
        size_t chunk = (n + workers - 1) / workers;
        {
            std::unique_lock<std::mutex> lk(mutex_);
            job_ = &body;
            job_n_ = n;
            job_chunk_ = chunk;
            pending_ = 0;
            for (int w = 1; w < workers; ++w) {
                size_t begin = static_cast<size_t>(w) * chunk;
                if (begin < n) ++pending_;
            }
            ++generation_;
        }
        cv_.notify_all();
        // chunk 0 runs on the calling thread
        size_t end0 = std::min(chunk, n);
        if (end0 > 0) {
            tl_in_parallel = true;
            body(0, end0);
            tl_in_parallel = false;
        }
        std::unique_lock<std::mutex> lk(mutex_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

  private:
    Pool() {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (n > 8) n = 8;
        if (const char* env = std::getenv("WCAD_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) n = v;
        }
        size_ = n;
        start();
    }

    ~Pool() { shutdown(); }

    void start() {
        stop_ = false;
        for (int w = 1; w < size_; ++w) {
            threads_.emplace_back([this, w] { worker(w); });
        }
    }

    void shutdown() {
        {
            std::lock_guard<std::mutex> lk(mutex_);
            stop_ = true;
            ++generation_;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
        threads_.clear();
    }

    void worker(int index) {
        uint64_t seen = 0;
        for (;;) {
            const std::function<void(size_t, size_t)>* job = nullptr;
            size_t n = 0, chunk = 0;
            {
                std::unique_lock<std::mutex> lk(mutex_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                job = job_;
                n = job_n_;
                chunk = job_chunk_;
            }
            if (!job) continue;
            size_t begin = static_cast<size_t>(index) * chunk;
            if (begin < n) {
                size_t end = std::min(begin + chunk, n);
                tl_in_parallel = true;
                (*job)(begin, end);
                tl_in_parallel = false;
                std::lock_guard<std::mutex> lk(mutex_);
                if (--pending_ == 0) done_cv_.notify_one();
            }
        }
    }

    int size_ = 1;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::mutex run_mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(size_t, size_t)>* job_ = nullptr;
    size_t job_n_ = 0;
    size_t job_chunk_ = 0;
    int pending_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

}  // namespace

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body) {
    if (n == 0) return;
    if (tl_in_parallel) {  // nested: run serially inside the outer split
        body(0, n);
        return;
    }
    Pool& pool = Pool::instance();
    if (pool.size() == 1 || n == 1) {
        body(0, n);
        return;
    }
    pool.run(n, body);
}

void set_num_threads(int n) { Pool::instance().resize(n); }

int num_threads() { return Pool::instance().size(); }

}  // namespace wcad
