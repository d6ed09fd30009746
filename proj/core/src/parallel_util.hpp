// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace deint::detail {

/// Runs fn(0..n_tasks) across up to `threads` workers. Tasks must own
/// disjoint output slots so scheduling order cannot change results.
inline void parallel_run(int n_tasks, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n_tasks <= 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i; (i = next.fetch_add(1)) < n_tasks;) fn(i);
    };
    const int n_workers = std::min(threads, n_tasks);
    std::vector<std::thread> pool;
    pool.reserve(n_workers - 1);
    for (int i = 0; i < n_workers - 1; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace deint::detail
