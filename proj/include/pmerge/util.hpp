#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pmerge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Kahan-Neumaier compensated accumulator.
class KahanSum {
 public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

 private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Ceiling that treats values a few ulps above an integer as that integer.
// Merging thresholds are constructed so that ratios like i*p_k/p_j land
// exactly on integers in real arithmetic; rounding must not push them up.
inline double ceil_tol(double y) {
    return std::ceil(y * (1.0 - 8.0 * std::numeric_limits<double>::epsilon()));
}

inline double clamp01(double x) { return std::min(std::max(x, 0.0), 1.0); }

// log(sum exp(a_i)) of two terms.
inline double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

namespace detail {

inline unsigned thread_cap() {
    if (const char* env = std::getenv("PMERGE_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace detail

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results
// must be written to disjoint slots so the output is order-independent.
// The first worker exception is rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned nthreads = std::min<std::size_t>(detail::thread_cap(), n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &first_error, &error_mu] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pmerge
