#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace rooney::par {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// Runs fn(chunk_index, begin, end) over [0, total) split into contiguous chunks,
// one per thread. Chunk boundaries depend only on (total, threads), so per-index
// work is reproducible; callers combine per-chunk accumulators in chunk order to
// keep floating-point reduction order fixed for a given thread count.
template <class Fn>
void run_chunked(std::int64_t total, int threads, Fn&& fn) {
    const int nc = int(std::min<std::int64_t>(std::max(1, threads), std::max<std::int64_t>(1, total)));
    if (nc == 1) {
        fn(0, std::int64_t{0}, total);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nc);
    for (int c = 0; c < nc; ++c) {
        const std::int64_t begin = total * c / nc;
        const std::int64_t end = total * (c + 1) / nc;
        pool.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace rooney::par
