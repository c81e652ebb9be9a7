#pragma once

// OpenMP execution primitives with a fixed decomposition. Reductions
// split [0, n) into a constant number of contiguous chunks, accumulate
// each chunk serially in index order, and combine the partials in chunk
// order. The floating-point result is therefore a pure function of the
// inputs: running with 1 thread or 32 produces bit-identical output.
// Serial reference implementations (naive left-to-right loops) live in
// bygars::serial_ref and are used by tests and the kernel benchmark.

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bygars::par {

inline constexpr std::int64_t kReduceChunks = 64;

// f(i) for each i in [0, n), any order. Outputs must be independent.
// Exceptions may not escape an OpenMP region; the first one thrown is
// captured and rethrown after the loop.
template <class Fn>
void for_each(std::int64_t n, Fn&& f) {
    std::exception_ptr error;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
#pragma omp critical(bygars_par_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

// Sum of term(i) over [0, n) with the canonical chunked order.
template <class TermFn>
double reduce_sum(std::int64_t n, TermFn&& term) {
    if (n <= 0) return 0.0;
    const std::int64_t chunks = n < kReduceChunks ? n : kReduceChunks;
    std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t lo = n * c / chunks;
        const std::int64_t hi = n * (c + 1) / chunks;
        double acc = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) acc += term(i);
        partial[static_cast<std::size_t>(c)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// Accumulates body(i, acc) into a dim-wide accumulator per chunk, then
// combines chunk partials in order into out (which is zeroed first).
template <class BodyFn>
void reduce_vec(std::int64_t n, std::size_t dim, BodyFn&& body, std::span<double> out) {
    for (double& x : out) x = 0.0;
    if (n <= 0) return;
    const std::int64_t chunks = n < kReduceChunks ? n : kReduceChunks;
    std::vector<double> partial(static_cast<std::size_t>(chunks) * dim, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < chunks; ++c) {
        std::span<double> acc(partial.data() + static_cast<std::size_t>(c) * dim, dim);
        const std::int64_t lo = n * c / chunks;
        const std::int64_t hi = n * (c + 1) / chunks;
        for (std::int64_t i = lo; i < hi; ++i) body(i, acc);
    }
    for (std::int64_t c = 0; c < chunks; ++c) {
        const double* p = partial.data() + static_cast<std::size_t>(c) * dim;
        for (std::size_t k = 0; k < dim; ++k) out[k] += p[k];
    }
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace bygars::par

namespace bygars::serial_ref {

template <class TermFn>
double reduce_sum(std::int64_t n, TermFn&& term) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += term(i);
    return acc;
}

template <class BodyFn>
void reduce_vec(std::int64_t n, std::size_t dim, BodyFn&& body, std::span<double> out) {
    for (double& x : out) x = 0.0;
    for (std::int64_t i = 0; i < n; ++i) body(i, out);
}

} // namespace bygars::serial_ref
