#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace dendi {

// Runs fn(i) for i in [0, n) on `workers` threads with a static block
// partition. Each index owns its output slot, so results are identical for
// any worker count; reductions must happen afterwards in index order.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (workers < 1) workers = 1;
    if (workers == 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = n;

    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        const int lo = static_cast<int>(static_cast<long long>(n) * t / workers);
        const int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
        threads.emplace_back([&, t, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace dendi
