#include "bygars/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bygars/errors.hpp"
#include "bygars/parallel.hpp"

namespace bygars {

namespace {

void check_rows(std::span<const std::int32_t> rows, const char* op) {
    if (rows.empty()) throw SimError(std::string(op) + ": empty row set");
}

// Per-row softmax terms. logits/probs are scratch of size K.
void softmax_probs(std::span<const double> x, std::span<const double> w, int k, int d,
                   double* probs) {
    double max_logit = -1e300;
    for (int c = 0; c < k; ++c) {
        double z = dot({w.data() + static_cast<std::size_t>(c) * d, static_cast<std::size_t>(d)}, x);
        probs[c] = z;
        max_logit = std::max(max_logit, z);
    }
    double norm = 0.0;
    for (int c = 0; c < k; ++c) {
        probs[c] = std::exp(probs[c] - max_logit);
        norm += probs[c];
    }
    for (int c = 0; c < k; ++c) probs[c] /= norm;
}

} // namespace

Objective Objective::for_dataset(const Dataset& ds, double l2_reg) {
    Objective obj;
    obj.kind = ds.kind == TaskKind::regression ? ObjectiveKind::mse_linear
                                               : ObjectiveKind::softmax_linear;
    obj.l2_reg = l2_reg;
    obj.d = ds.d;
    obj.num_classes = ds.num_classes;
    return obj;
}

double Objective::loss(const Dataset& ds, std::span<const std::int32_t> rows,
                       std::span<const double> w) const {
    check_rows(rows, "loss");
    const auto n = static_cast<std::int64_t>(rows.size());
    double total;
    if (kind == ObjectiveKind::mse_linear) {
        total = par::reduce_sum(n, [&](std::int64_t i) {
            const std::int32_t r = rows[static_cast<std::size_t>(i)];
            double resid = dot(ds.row(r), w) - ds.targets[static_cast<std::size_t>(r)];
            return 0.5 * resid * resid;
        });
    } else {
        const int k = num_classes;
        total = par::reduce_sum(n, [&](std::int64_t i) {
            const std::int32_t r = rows[static_cast<std::size_t>(i)];
            double probs[64];
            softmax_probs(ds.row(r), w, k, d, probs);
            double p = std::max(probs[ds.labels[static_cast<std::size_t>(r)]], 1e-300);
            return -std::log(p);
        });
    }
    double out = total / static_cast<double>(n);
    if (l2_reg > 0.0) {
        double nw = norm2(w);
        out += 0.5 * l2_reg * nw * nw;
    }
    return out;
}

ParamVector Objective::gradient(const Dataset& ds, std::span<const std::int32_t> rows,
                                std::span<const double> w,
                                std::span<const int> label_remap) const {
    check_rows(rows, "gradient");
    const auto n = static_cast<std::int64_t>(rows.size());
    ParamVector out(static_cast<std::size_t>(model_dim()), 0.0);
    if (kind == ObjectiveKind::mse_linear) {
        par::reduce_vec(
            n, out.size(),
            [&](std::int64_t i, std::span<double> acc) {
                const std::int32_t r = rows[static_cast<std::size_t>(i)];
                auto x = ds.row(r);
                double resid = dot(x, w) - ds.targets[static_cast<std::size_t>(r)];
                axpy(resid, x, acc);
            },
            out);
    } else {
        const int k = num_classes;
        par::reduce_vec(
            n, out.size(),
            [&](std::int64_t i, std::span<double> acc) {
                const std::int32_t r = rows[static_cast<std::size_t>(i)];
                auto x = ds.row(r);
                int label = ds.labels[static_cast<std::size_t>(r)];
                if (!label_remap.empty()) label = label_remap[static_cast<std::size_t>(label)];
                double probs[64];
                softmax_probs(x, w, k, d, probs);
                for (int c = 0; c < k; ++c) {
                    double coef = probs[c] - (c == label ? 1.0 : 0.0);
                    axpy(coef, x, acc.subspan(static_cast<std::size_t>(c) * d,
                                              static_cast<std::size_t>(d)));
                }
            },
            out);
    }
    scale_inplace(out, 1.0 / static_cast<double>(n));
    if (l2_reg > 0.0) axpy(l2_reg, w, out);
    return out;
}

ParamVector Objective::population_gradient(const Dataset& ds,
                                           std::span<const std::int32_t> training_rows,
                                           std::span<const double> w) const {
    return gradient(ds, training_rows, w);
}

double Objective::accuracy(const Dataset& ds, std::span<const std::int32_t> rows,
                           std::span<const double> w) const {
    if (kind != ObjectiveKind::softmax_linear)
        throw SimError("accuracy is defined for classification only");
    check_rows(rows, "accuracy");
    const auto n = static_cast<std::int64_t>(rows.size());
    const int k = num_classes;
    double hits = par::reduce_sum(n, [&](std::int64_t i) {
        const std::int32_t r = rows[static_cast<std::size_t>(i)];
        auto x = ds.row(r);
        int best = 0;
        double best_z = -1e300;
        for (int c = 0; c < k; ++c) {
            double z = dot({w.data() + static_cast<std::size_t>(c) * d,
                            static_cast<std::size_t>(d)},
                           x);
            if (z > best_z) {
                best_z = z;
                best = c;
            }
        }
        return best == ds.labels[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
    });
    return hits / static_cast<double>(n);
}

ParamVector closed_form_optimum(const Objective& obj, const Dataset& ds,
                                std::span<const std::int32_t> rows) {
    if (obj.kind != ObjectiveKind::mse_linear)
        throw ConfigError("closed_form_optimum requires the mse_linear objective");
    check_rows(rows, "closed_form_optimum");
    const int d = obj.d;
    const auto n = static_cast<std::int64_t>(rows.size());

    // A = X^T X / N + l2 I (lower triangle), b = X^T y / N.
    std::vector<double> a(static_cast<std::size_t>(d) * d, 0.0);
    par::reduce_vec(
        n, a.size(),
        [&](std::int64_t i, std::span<double> acc) {
            auto x = ds.row(rows[static_cast<std::size_t>(i)]);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c <= r; ++c)
                    acc[static_cast<std::size_t>(r) * d + c] += x[static_cast<std::size_t>(r)] * x[static_cast<std::size_t>(c)];
        },
        a);
    ParamVector b(static_cast<std::size_t>(d), 0.0);
    par::reduce_vec(
        n, b.size(),
        [&](std::int64_t i, std::span<double> acc) {
            const std::int32_t r = rows[static_cast<std::size_t>(i)];
            axpy(ds.targets[static_cast<std::size_t>(r)], ds.row(r), acc);
        },
        b);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : a) v *= inv_n;
    for (double& v : b) v *= inv_n;
    for (int r = 0; r < d; ++r) a[static_cast<std::size_t>(r) * d + r] += obj.l2_reg;

    // In-place Cholesky A = L L^T on the lower triangle. Pivots are held
    // to a relative floor so rank-deficient systems fail loudly instead
    // of surviving on rounding noise.
    for (int c = 0; c < d; ++c) {
        const double entry_diag = a[static_cast<std::size_t>(c) * d + c];
        double diag = entry_diag;
        for (int k = 0; k < c; ++k) {
            double l = a[static_cast<std::size_t>(c) * d + k];
            diag -= l * l;
        }
        if (diag <= 1e-12 * entry_diag || entry_diag <= 0.0)
            throw SimError("closed_form_optimum: singular normal equations; set l2_reg > 0");
        double root = std::sqrt(diag);
        a[static_cast<std::size_t>(c) * d + c] = root;
        for (int r = c + 1; r < d; ++r) {
            double v = a[static_cast<std::size_t>(r) * d + c];
            for (int k = 0; k < c; ++k)
                v -= a[static_cast<std::size_t>(r) * d + k] * a[static_cast<std::size_t>(c) * d + k];
            a[static_cast<std::size_t>(r) * d + c] = v / root;
        }
    }
    // Solve L z = b, then L^T w = z.
    ParamVector w(b);
    for (int r = 0; r < d; ++r) {
        double v = w[static_cast<std::size_t>(r)];
        for (int k = 0; k < r; ++k) v -= a[static_cast<std::size_t>(r) * d + k] * w[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(r)] = v / a[static_cast<std::size_t>(r) * d + r];
    }
    for (int r = d - 1; r >= 0; --r) {
        double v = w[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < d; ++k) v -= a[static_cast<std::size_t>(k) * d + r] * w[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(r)] = v / a[static_cast<std::size_t>(r) * d + r];
    }
    return w;
}

} // namespace bygars
