#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace lad {

// Runs fn(0..n-1) across up to `threads` workers. Each index must touch
// only its own output slot; callers do any order-sensitive reduction
// afterwards, which keeps results independent of the thread count.
template <typename F>
void parallel_for(int n, int threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace lad
