#include "llmfrac/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace llmfrac {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_worker_threads(unsigned n) noexcept { g_threads.store(n); }

unsigned worker_threads() noexcept {
    unsigned n = g_threads.load();
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return n;
}

void parallel_for(std::size_t n_jobs, const std::function<void(std::size_t)>& fn) {
    if (n_jobs == 0) return;
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::size_t>(worker_threads(), n_jobs));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n_jobs) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace llmfrac
