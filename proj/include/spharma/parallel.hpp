#ifndef SPHARMA_PARALLEL_HPP
#define SPHARMA_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spharma {

/// Worker cap: SPHARMA_THREADS if set and positive, else the hardware count.
int worker_count();

/// Runs body(i) for i in [0, n) over a static partition. Each index is
/// processed exactly once, so results written per index do not depend on the
/// schedule. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::int64_t n, Body&& body)
{
    const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::int64_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::int64_t i = w; i < n; i += workers)
                    body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : threads)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace spharma

#endif // SPHARMA_PARALLEL_HPP
