#include "causalfew/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace causalfew {

namespace {
std::atomic<int> g_threads{0};
thread_local bool t_inside_parallel = false;

int resolve_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n > 0) return n;
    const char* env = std::getenv("CAUSALFEW_THREADS");
    if (env) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

void set_num_threads(int n) { g_threads.store(n, std::memory_order_relaxed); }

int num_threads() { return resolve_threads(); }

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    const int workers = t_inside_parallel ? 1 : std::min<std::int64_t>(resolve_threads(), count);
    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = begin + w * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            t_inside_parallel = true;
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
            t_inside_parallel = false;
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace causalfew
