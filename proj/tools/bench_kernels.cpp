// Kernel benchmark: times the naive serial reference against the
// chunked OpenMP kernels at 1 and at max threads, on the gradient and
// loss reductions that dominate a run. Sanity-checks agreement while
// it is at it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "bygars/core.hpp"
#include "bygars/data.hpp"
#include "bygars/objective.hpp"
#include "bygars/parallel.hpp"
#include "bygars/rng.hpp"

using namespace bygars;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

ParamVector serial_mse_gradient(const Dataset& ds, const std::vector<std::int32_t>& rows,
                                const ParamVector& w) {
    ParamVector out(w.size(), 0.0);
    serial_ref::reduce_vec(
        static_cast<std::int64_t>(rows.size()), out.size(),
        [&](std::int64_t i, std::span<double> acc) {
            auto x = ds.row(rows[static_cast<std::size_t>(i)]);
            double resid = dot(x, w) - ds.targets[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
            axpy(resid, x, acc);
        },
        out);
    scale_inplace(out, 1.0 / static_cast<double>(rows.size()));
    return out;
}

double serial_mse_loss(const Dataset& ds, const std::vector<std::int32_t>& rows,
                       const ParamVector& w) {
    double total = serial_ref::reduce_sum(
        static_cast<std::int64_t>(rows.size()), [&](std::int64_t i) {
            const std::int32_t r = rows[static_cast<std::size_t>(i)];
            double resid = dot(ds.row(r), w) - ds.targets[static_cast<std::size_t>(r)];
            return 0.5 * resid * resid;
        });
    return total / static_cast<double>(rows.size());
}

} // namespace

int main() {
    const int d = 64;
    const std::int64_t n = 400000;
    SyntheticSpec spec;
    spec.d = d;
    spec.n_total = n;
    spec.n_test = 1;
    spec.n_aux = 1;
    RngStream rng(7, 1);
    auto gen = generate_regression(spec, rng);
    const Dataset& ds = gen.dataset;
    Objective obj = Objective::for_dataset(ds, 0.0);

    std::vector<std::int32_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    ParamVector w(static_cast<std::size_t>(d));
    for (double& v : w) v = rng.normal();

    const int reps = 5;
    const int max_threads = par::max_threads();

    std::printf("kernel benchmark: %lld rows x %d cols, best of %d\n",
                static_cast<long long>(n), d, reps);
    std::printf("%-22s %12s %14s %14s %9s\n", "kernel", "serial ref", "chunked @1", "chunked @max",
                "speedup");

    ParamVector g_ref, g_par;
    double t_ref = time_best_of(reps, [&] { g_ref = serial_mse_gradient(ds, rows, w); });
    par::set_threads(1);
    double t_one = time_best_of(reps, [&] { g_par = obj.gradient(ds, rows, w); });
    par::set_threads(max_threads);
    double t_max = time_best_of(reps, [&] { g_par = obj.gradient(ds, rows, w); });
    double dev = 0.0;
    for (std::size_t i = 0; i < g_par.size(); ++i)
        dev = std::max(dev, std::fabs(g_par[i] - g_ref[i]));
    std::printf("%-22s %10.2f ms %12.2f ms %12.2f ms %8.2fx   (max dev %.2e)\n", "mse gradient",
                1e3 * t_ref, 1e3 * t_one, 1e3 * t_max, t_ref / t_max, dev);

    double l_ref = 0.0, l_par = 0.0;
    t_ref = time_best_of(reps, [&] { l_ref = serial_mse_loss(ds, rows, w); });
    par::set_threads(1);
    t_one = time_best_of(reps, [&] { l_par = obj.loss(ds, rows, w); });
    par::set_threads(max_threads);
    t_max = time_best_of(reps, [&] { l_par = obj.loss(ds, rows, w); });
    std::printf("%-22s %10.2f ms %12.2f ms %12.2f ms %8.2fx   (dev %.2e)\n", "mse loss",
                1e3 * t_ref, 1e3 * t_one, 1e3 * t_max, t_ref / t_max, std::fabs(l_par - l_ref));

    // Softmax pass on a classification set of the same shape.
    SyntheticSpec cls = spec;
    cls.kind = TaskKind::classification;
    cls.num_classes = 10;
    RngStream crng(7, 2);
    Dataset cds = generate_classification(cls, crng);
    Objective cobj = Objective::for_dataset(cds, 0.0);
    ParamVector cw(static_cast<std::size_t>(cobj.model_dim()));
    for (double& v : cw) v = 0.05 * rng.normal();

    ParamVector cg;
    par::set_threads(1);
    t_one = time_best_of(reps, [&] { cg = cobj.gradient(cds, rows, cw); });
    par::set_threads(max_threads);
    t_max = time_best_of(reps, [&] { cg = cobj.gradient(cds, rows, cw); });
    std::printf("%-22s %12s %12.2f ms %12.2f ms %8.2fx\n", "softmax gradient", "-", 1e3 * t_one,
                1e3 * t_max, t_one / t_max);

    std::printf("threads available: %d\n", max_threads);
    return 0;
}
