#pragma once

// Server-side aggregation. ByGARS scores workers by running k meta
// iterations per round: a pseudo parameter update with the current
// reputation vector, then a first-order reputation update against a
// fresh auxiliary mini-batch gradient evaluated at the pseudo point.
// ByGARS++ folds the meta step into the round: the parameter update uses
// the previous reputation vector while the reputation update contracts
// toward the inner products of the received gradients with the
// auxiliary gradient at the current point. Average, coordinate-wise
// median, and the oracle baseline (mean of benign rows plus the
// auxiliary gradient) are kept for comparison.

#include <cstdint>
#include <string>
#include <vector>

#include "bygars/core.hpp"
#include "bygars/data.hpp"
#include "bygars/objective.hpp"
#include "bygars/rng.hpp"

namespace bygars {

enum class AggregatorKind { bygars, bygars_pp, average, median, baseline_oracle };

const char* to_string(AggregatorKind kind);
AggregatorKind aggregator_kind_from_string(const std::string& name);

// Per-kind worker-gradient norm targets; the auxiliary gradient is
// always normalized to 1 (override via Aggregator::aux_target_norm).
double worker_norm_target(AggregatorKind kind);

// Normalizes worker rows to the per-kind target and the auxiliary
// gradient (when given) to aux_target. Non-finite rows are zeroed
// instead of aborting; returns how many rows were zeroed.
int apply_norm_policy(AggregatorKind kind, GradientBatch& h, ParamVector* aux_grad,
                      double aux_target = 1.0);

// Samples auxiliary mini-batches and evaluates the auxiliary gradient.
struct AuxOracle {
    const Objective* objective = nullptr;
    const Dataset* dataset = nullptr;
    std::vector<std::int32_t> aux_indices;
    int aux_batch_size = 0;
    RngStream* rng = nullptr;
    mutable std::int64_t draws = 0; // evaluation counter, used by tests

    AuxOracle(const Objective& obj, const Dataset& ds, std::vector<std::int32_t> aux,
              int batch, RngStream& stream);

    std::vector<std::int32_t> sample() const;
    ParamVector grad_at(std::span<const double> w) const;
    ParamVector grad_at(std::span<const double> w,
                        std::span<const std::int32_t> batch) const;
};

struct Aggregator {
    AggregatorKind kind = AggregatorKind::bygars_pp;
    ParamVector q;              // reputation scores, zero-initialized
    int k_meta = 3;             // bygars meta iterations
    ScheduleSpec schedules;
    bool normalize_gradients = true;  // off in theorem-check mode
    bool reuse_aux_batch = false;     // bygars ablation: one aux batch per round
    double aux_target_norm = 1.0;

    Aggregator() = default;
    Aggregator(AggregatorKind kind_, int m, ScheduleSpec sched);

    // Advances reputation state and returns w_{t+1}. The norm policy for
    // worker rows must already be applied (the harness does it in
    // empirical mode); auxiliary gradients are normalized here at each
    // draw. benign_mask is required by baseline_oracle and ignored
    // otherwise; it is injected by the harness, never derived here.
    ParamVector step(std::span<const double> w, const GradientBatch& h, const AuxOracle& aux,
                     std::int64_t t, const std::vector<char>* benign_mask = nullptr);
};

// Coordinate-wise median of the batch rows (mean of the two middle
// order statistics for even m).
ParamVector coordinate_median(const GradientBatch& h);

} // namespace bygars
