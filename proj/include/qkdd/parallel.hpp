#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include "qkdd/seeding.hpp"

namespace qkdd {

/// Runs body(i) for i in [0, count) on OpenMP workers. Each index writes
/// only its own output slot, so results do not depend on scheduling. The
/// first exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for_index(std::size_t count, Body&& body)
{
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
    for (long long i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace qkdd
