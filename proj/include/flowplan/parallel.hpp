#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace flowplan {

/// Number of workers to use when the caller passes 0.
inline unsigned default_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Static block partition of [0, n) over `threads` workers. Worker k always
 * receives the same contiguous range for a given (n, threads), and each range
 * is processed in ascending order, so any per-index result is independent of
 * the worker count. `body(begin, end)` must only write state owned by its range.
 * The first exception thrown by a worker is rethrown on the calling thread.
 */
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads == 0) threads = default_thread_count();
    const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](std::size_t begin, std::size_t end) {
        try {
            body(begin, end);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = n / workers;
    const std::size_t extra = n % workers;
    std::size_t begin = 0;
    std::size_t first_end = 0;
    for (std::size_t k = 0; k < workers; ++k) {
        const std::size_t end = begin + chunk + (k < extra ? 1 : 0);
        if (k == 0) {
            first_end = end;
        } else {
            pool.emplace_back(run, begin, end);
        }
        begin = end;
    }
    run(0, first_end);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

} // namespace flowplan
