#pragma once
// Index-parallel loop over independent tasks. LD_LATTICE_THREADS caps the worker count.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ldl {

inline int worker_count() {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("LD_LATTICE_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap >= 1) return std::min(cap, hw);
        } catch (...) {
        }
    }
    return hw;
}

/// Runs fn(i) for i in [0, n). Results must go to per-index slots so the outcome does not
/// depend on scheduling. The first exception thrown by any task is rethrown.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
    int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto loop = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace ldl
