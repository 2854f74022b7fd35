#ifndef DEPTHGAZE_PARALLEL_HPP
#define DEPTHGAZE_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace depthgaze {

// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
// so results are identical for any thread count; reductions happen at the
// call site in index order.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    const size_t workers = std::min<size_t>(std::max(threads, 1), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace depthgaze

#endif
