#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace probe {

int thread_count();

// Static contiguous partition over [0, n). Each item must write only to its
// own slot; callers reduce afterwards in index order, so results do not
// depend on the thread count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
    const int t = std::min(thread_count(), n);
    if (t <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    const int chunk = (n + t - 1) / t;
    for (int w = 0; w < t; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : workers) th.join();
}

}  // namespace probe
