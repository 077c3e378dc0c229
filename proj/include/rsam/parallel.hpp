#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace rsam {

// Runs fn(begin, end) over contiguous chunks of [0, n). threads <= 1 runs a
// single chunk on the calling thread, which is the bitwise-reference mode.
inline void parallel_chunks(int n, int threads,
                            const std::function<void(int, int)>& fn) {
    if (threads <= 1 || n <= 1) {
        fn(0, n);
        return;
    }
    const int k = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(k);
    const int chunk = (n + k - 1) / k;
    for (int t = 0; t < k; ++t) {
        const int b = t * chunk;
        const int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace rsam
