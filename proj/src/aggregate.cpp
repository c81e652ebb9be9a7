#include "bygars/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "bygars/errors.hpp"

namespace bygars {

const char* to_string(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::bygars: return "bygars";
        case AggregatorKind::bygars_pp: return "bygars_pp";
        case AggregatorKind::average: return "average";
        case AggregatorKind::median: return "median";
        case AggregatorKind::baseline_oracle: return "baseline_oracle";
    }
    return "?";
}

AggregatorKind aggregator_kind_from_string(const std::string& name) {
    if (name == "bygars") return AggregatorKind::bygars;
    if (name == "bygars_pp") return AggregatorKind::bygars_pp;
    if (name == "average") return AggregatorKind::average;
    if (name == "median") return AggregatorKind::median;
    if (name == "baseline_oracle") return AggregatorKind::baseline_oracle;
    throw ConfigError("unknown aggregator kind: " + name);
}

double worker_norm_target(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::bygars: return 1.0;
        case AggregatorKind::bygars_pp: return 2.0;
        default: return 5.0;
    }
}

int apply_norm_policy(AggregatorKind kind, GradientBatch& h, ParamVector* aux_grad,
                      double aux_target) {
    const double target = worker_norm_target(kind);
    int corrupted = 0;
    for (int j = 0; j < h.m; ++j) {
        auto row = h.row(j);
        if (!all_finite(row)) {
            std::fill(row.begin(), row.end(), 0.0);
            ++corrupted;
            continue;
        }
        normalize_inplace(row, target);
    }
    if (aux_grad) normalize_inplace(*aux_grad, aux_target);
    return corrupted;
}

AuxOracle::AuxOracle(const Objective& obj, const Dataset& ds, std::vector<std::int32_t> aux,
                     int batch, RngStream& stream)
    : objective(&obj), dataset(&ds), aux_indices(std::move(aux)), aux_batch_size(batch),
      rng(&stream) {
    if (aux_indices.empty()) throw ConfigError("auxiliary index set is empty");
    if (aux_batch_size < 1 || aux_batch_size > static_cast<int>(aux_indices.size()))
        throw ConfigError("aux_batch_size must be in [1, n_aux]");
}

std::vector<std::int32_t> AuxOracle::sample() const {
    return sample_batch(aux_indices, aux_batch_size, *rng);
}

ParamVector AuxOracle::grad_at(std::span<const double> w) const {
    auto batch = sample();
    return grad_at(w, batch);
}

ParamVector AuxOracle::grad_at(std::span<const double> w,
                               std::span<const std::int32_t> batch) const {
    ++draws;
    return objective->gradient(*dataset, batch, w);
}

Aggregator::Aggregator(AggregatorKind kind_, int m, ScheduleSpec sched)
    : kind(kind_), q(static_cast<std::size_t>(m), 0.0), schedules(sched) {
    if (kind == AggregatorKind::bygars && k_meta < 1)
        throw ConfigError("bygars requires k_meta >= 1");
}

ParamVector coordinate_median(const GradientBatch& h) {
    ParamVector out(static_cast<std::size_t>(h.d), 0.0);
    std::vector<double> column(static_cast<std::size_t>(h.m));
    for (int c = 0; c < h.d; ++c) {
        for (int j = 0; j < h.m; ++j) column[static_cast<std::size_t>(j)] = h.row(j)[static_cast<std::size_t>(c)];
        std::sort(column.begin(), column.end());
        const int mid = h.m / 2;
        out[static_cast<std::size_t>(c)] =
            (h.m % 2 == 1) ? column[static_cast<std::size_t>(mid)]
                           : 0.5 * (column[static_cast<std::size_t>(mid - 1)] + column[static_cast<std::size_t>(mid)]);
    }
    return out;
}

namespace {

ParamVector stepped(std::span<const double> w, double gamma, std::span<const double> dir) {
    ParamVector next(w.begin(), w.end());
    axpy(-gamma, dir, next);
    return next;
}

} // namespace

ParamVector Aggregator::step(std::span<const double> w, const GradientBatch& h,
                             const AuxOracle& aux, std::int64_t t,
                             const std::vector<char>* benign_mask) {
    if (static_cast<int>(q.size()) != h.m)
        throw SimError("aggregator state size does not match the gradient batch");
    const double gamma = gamma_at(schedules, t);
    const double alpha = alpha_at(schedules, t);

    switch (kind) {
        case AggregatorKind::bygars: {
            if (k_meta < 1) throw ConfigError("bygars requires k_meta >= 1");
            std::vector<std::int32_t> fixed_batch;
            if (reuse_aux_batch) fixed_batch = aux.sample();
            for (int i = 0; i < k_meta; ++i) {
                ParamVector pseudo = stepped(w, gamma, weighted_row_sum(h, q));
                ParamVector g = reuse_aux_batch ? aux.grad_at(pseudo, fixed_batch)
                                                : aux.grad_at(pseudo);
                if (normalize_gradients) normalize_inplace(g, aux_target_norm);
                ParamVector incr = row_dots(h, g);
                axpy(alpha * gamma, incr, q);
            }
            return stepped(w, gamma, weighted_row_sum(h, q));
        }
        case AggregatorKind::bygars_pp: {
            // Auxiliary gradient at w_t, evaluated before the parameter
            // update; the q refresh can overlap the workers' next round.
            ParamVector g = aux.grad_at(w);
            if (normalize_gradients) normalize_inplace(g, aux_target_norm);
            ParamVector next = stepped(w, gamma, weighted_row_sum(h, q));
            ParamVector incr = row_dots(h, g);
            for (std::size_t j = 0; j < q.size(); ++j)
                q[j] = (1.0 - alpha) * q[j] + alpha * incr[j];
            return next;
        }
        case AggregatorKind::average: {
            ParamVector mean(static_cast<std::size_t>(h.d), 0.0);
            for (int j = 0; j < h.m; ++j) axpy(1.0, h.row(j), mean);
            scale_inplace(mean, 1.0 / h.m);
            return stepped(w, gamma, mean);
        }
        case AggregatorKind::median:
            return stepped(w, gamma, coordinate_median(h));
        case AggregatorKind::baseline_oracle: {
            if (!benign_mask || static_cast<int>(benign_mask->size()) != h.m)
                throw SimError("baseline_oracle requires the harness-provided benign mask");
            ParamVector g = aux.grad_at(w);
            if (normalize_gradients) normalize_inplace(g, aux_target_norm);
            ParamVector mean(g.begin(), g.end());
            int count = 1;
            for (int j = 0; j < h.m; ++j) {
                if ((*benign_mask)[static_cast<std::size_t>(j)]) {
                    axpy(1.0, h.row(j), mean);
                    ++count;
                }
            }
            scale_inplace(mean, 1.0 / count);
            return stepped(w, gamma, mean);
        }
    }
    throw SimError("unreachable aggregator kind");
}

} // namespace bygars
