#include "sem/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sem {

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    if (count <= 0) return;
    if (workers <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    const int n_threads = std::min(workers, count);
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sem
