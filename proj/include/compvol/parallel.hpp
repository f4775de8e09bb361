// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace compvol {

inline constexpr const char* kThreadsEnv = "COMPVOL_THREADS";

/// requested > 0 wins, then $COMPVOL_THREADS, then the hardware count.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnv)) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Hands out item indices [0, n) to `threads` workers. Each worker calls
/// `body(next)` once, where next() returns the next index or -1. Items must
/// write disjoint outputs; the result is then independent of scheduling.
template <class Body>
void parallel_items(int n, int threads, Body&& body) {
    std::atomic<int> counter{0};
    auto next = [&counter, n]() -> int {
        const int i = counter.fetch_add(1, std::memory_order_relaxed);
        return i < n ? i : -1;
    };
    threads = std::clamp(threads, 1, std::max(1, n));
    if (threads == 1) {
        body(next);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            try {
                body(next);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                counter.store(n);
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace compvol
