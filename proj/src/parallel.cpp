#include "amdnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace amdnet {

namespace {
std::atomic<int> g_threads{1};
}

void set_worker_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int worker_threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int nt = worker_threads();
    if (nt <= 1 || n <= 1) {
        fn(0, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace amdnet
