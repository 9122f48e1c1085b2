#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hodoflow {

// Chunked index loop over [0, n). Results must be written by index so the
// output is identical for any worker count.
inline void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t nw = std::min<size_t>(static_cast<size_t>(workers), n);
    const size_t chunk = (n + nw - 1) / nw;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nw);
    for (size_t w = 0; w < nw; ++w) {
        const size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    for (std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace hodoflow
