#pragma once

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace climreg {

/// Worker count for batch-level parallelism. Defaults to 1; the
/// REGIME_THREADS environment variable caps/overrides it. Results are
/// required to be identical for any value.
inline int worker_count() {
    if (const char* env = std::getenv("REGIME_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) {
            return n;
        }
    }
    return 1;
}

/// Runs fn(block) for block = 0..n_blocks-1, distributing blocks across
/// workers statically. Each block must write only to its own output slot;
/// callers combine slots in block order afterwards, so results do not
/// depend on the worker count. Exceptions are rethrown on the caller.
template <typename Fn>
void parallel_blocks(std::size_t n_blocks, int n_workers, Fn&& fn) {
    if (n_workers <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            fn(b);
        }
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(n_workers), n_blocks);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (std::size_t b = w; b < n_blocks; b += workers) {
                    fn(b);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : threads) {
        t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace climreg
