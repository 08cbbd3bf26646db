#include "fitngp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fitngp {

namespace {

std::atomic<unsigned> g_requested{0};

unsigned from_environment()
{
    const char* env = std::getenv("FITNGP_THREADS");
    if (env == nullptr || *env == '\0') {
        return 0;
    }
    try {
        const long v = std::stol(env);
        return v > 0 ? static_cast<unsigned>(v) : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

}  // namespace

void set_thread_count(unsigned n) { g_requested.store(n); }

unsigned thread_count()
{
    unsigned n = g_requested.load();
    if (n == 0) {
        n = from_environment();
    }
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) {
        pool.emplace_back(run);
    }
    run();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace fitngp
