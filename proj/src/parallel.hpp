#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace msd::detail {

/// Worker count: MSD_THREADS when set to a positive integer, otherwise the
/// machine's hardware concurrency.
unsigned thread_count();

/// Calls fn(begin, end) on disjoint contiguous chunks covering [0, n). The
/// first exception thrown by any chunk is rethrown on the calling thread.
template <class Fn>
void parallel_chunks(Eigen::Index n, Fn&& fn) {
    const auto workers = static_cast<Eigen::Index>(
        std::min<Eigen::Index>(thread_count(), std::max<Eigen::Index>(1, n / 4096)));
    if (workers <= 1) {
        fn(Eigen::Index{0}, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    const Eigen::Index chunk = (n + workers - 1) / workers;
    for (Eigen::Index w = 0; w < workers; ++w) {
        const Eigen::Index begin = w * chunk;
        const Eigen::Index end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace msd::detail
