#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace radcine {

// Process-wide worker count. 1 (the default for tests) forces the fully
// deterministic sequential path; the CLI sets it from --threads.
inline int& thread_count_ref() {
    static int n = 1;
    return n;
}

inline void set_thread_count(int n) { thread_count_ref() = std::max(1, n); }
inline int thread_count() { return thread_count_ref(); }

// Static partition of [0, n) over the configured workers. Safe only when
// iterations write to disjoint outputs; reductions must be done by the
// caller in a fixed order.
template <typename F>
void parallel_for(int64_t n, F&& fn) {
    const int workers = std::min<int64_t>(thread_count(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int64_t lo = w * chunk;
        const int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace radcine
