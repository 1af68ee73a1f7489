#include "bubbleloja/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace bubbleloja {

int max_threads() {
    static const int cached = [] {
        const char* env = std::getenv("BUBBLELOJA_THREADS");
        int n = 0;
        if (env) n = std::atoi(env);
        if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
        return std::max(1, n);
    }();
    return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(max_threads(), std::max<std::size_t>(n, 1));
    if (workers <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::size_t b = std::min(n, w * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace bubbleloja
