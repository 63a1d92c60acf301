#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chaospde {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Indices are split
/// into contiguous blocks; fn must only write state owned by index i. The
/// first exception thrown by any worker is rethrown on the caller.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t block = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = w * block;
            const std::size_t last = std::min(n, first + block);
            if (first >= last)
                break;
            pool.emplace_back([&, first, last] {
                try {
                    for (std::size_t i = first; i < last; ++i)
                        fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

/// Worker count used when a caller passes 0.
inline std::size_t default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace chaospde
