#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qpgamma {

/// Split [0, n) into `jobs` contiguous chunks and run fn(chunk, begin, end)
/// on worker threads. Results should be stored per chunk and merged in chunk
/// order by the caller so output never depends on scheduling.
template<class F>
void parallel_chunks(std::size_t n, unsigned jobs, F&& fn)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned c = 0; c < jobs; ++c) {
        const std::size_t begin = n * c / jobs;
        const std::size_t end = n * (c + 1) / jobs;
        workers.emplace_back([&, c, begin, end] {
            try {
                fn(std::size_t{c}, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& w : workers)
        w.join();
    for (auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
}

inline unsigned chunk_count(std::size_t n, unsigned jobs)
{
    return std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
}

}  // namespace qpgamma
