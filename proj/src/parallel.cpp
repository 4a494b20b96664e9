#include "heatpot/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace heatpot {

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int n) { g_workers.store(n < 1 ? 1 : n); }
int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    int nw = worker_count();
    if (nw <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (static_cast<std::size_t>(nw) > n) nw = static_cast<int>(n);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) {
        std::size_t lo = n * w / nw, hi = n * (w + 1) / nw;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace heatpot
