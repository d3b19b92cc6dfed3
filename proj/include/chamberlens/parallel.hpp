#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace chamberlens {

/// Worker count: CHAMBERLENS_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
inline unsigned thread_count() {
    if (const char* env = std::getenv("CHAMBERLENS_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Callers must only
/// write to per-index or per-chunk state; the chunking is a function of n
/// and the worker count, so reductions should go through fixed-size blocks.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = thread_count()) {
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1 || n < 256) {
        if (n > 0) {
            fn(std::size_t{0}, n);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
}

} // namespace chamberlens
