#include "slope/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace slope {
namespace {
std::atomic<std::size_t> g_jobs{1};
}

std::size_t get_jobs() { return g_jobs.load(); }

void set_jobs(std::size_t jobs) { g_jobs.store(jobs == 0 ? 1 : jobs); }

std::size_t jobs_from_env(std::size_t fallback) {
    const char* env = std::getenv("SLOPE_DESIGNER_THREADS");
    if (env == nullptr || *env == '\0') return fallback;
    try {
        const long v = std::stol(env);
        return v >= 1 ? static_cast<std::size_t>(v) : fallback;
    } catch (...) {
        return fallback;
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t jobs = std::min(get_jobs(), n == 0 ? std::size_t{1} : n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (std::size_t w = 0; w < jobs; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace slope
