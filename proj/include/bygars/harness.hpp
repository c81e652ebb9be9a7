#pragma once

// Experiment runner: wires data -> workers -> aggregator -> metrics.
// A run is a pure function of its RunConfig; identical configs (seed
// included) replay bit-identical metrics apart from wall_time.
//
// Modes:
//   empirical     - disjoint worker shards, held-out auxiliary set, the
//                   per-aggregator gradient norm policy.
//   theorem_check - the multiplicative-noise setting of the convergence
//                   analysis: normalization off, strong convexity via
//                   l2_reg, and every stochastic gradient (workers and
//                   server alike) drawn from one shared training pool so
//                   all of them are unbiased for the pool gradient.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bygars/adversary.hpp"
#include "bygars/aggregate.hpp"
#include "bygars/core.hpp"
#include "bygars/data.hpp"
#include "bygars/objective.hpp"

namespace bygars {

enum class RunMode { empirical, theorem_check };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct AggregatorConfig {
    AggregatorKind kind = AggregatorKind::bygars_pp;
    int k_meta = 3;
    bool reuse_aux_batch = false;
    double aux_target_norm = 1.0;
};

struct RunConfig {
    RunMode mode = RunMode::empirical;
    SyntheticSpec task;
    int workers = 8;
    std::vector<AttackSpec> attacks; // empty means all benign
    AggregatorConfig aggregator;
    ScheduleSpec schedules;
    int batch_size = 32;
    int aux_batch_size = 32;
    std::int64_t iterations = 2000;
    int eval_every = 10;
    std::uint64_t seed = 0;
    // Not-set sentinel; resolves to 0 (empirical) or 1e-3 (theorem_check).
    std::optional<double> l2_reg;
    // Per-iteration <grad F, H^T q> recording (theorem mode only); the
    // long convergence runs turn it off to skip the pool gradient.
    bool record_tolerance_stat = true;
    double ball_radius_warn = 1e3;
};

// Fills defaults (benign attack list, mode-dependent l2) and checks
// every structural constraint; throws ConfigError.
RunConfig validated(RunConfig cfg);

double resolved_l2(const RunConfig& cfg);

// Everything derived deterministically from the config before the loop.
struct SimEnv {
    Dataset dataset;
    DataSplit split;
    std::vector<std::int32_t> train_rows; // shards + aux (empirical) or the pool (theorem)
    Objective objective;
    ParamVector theta_star; // regression ground truth
    ParamVector w_star;     // least-squares optimum (mse only)
    ParamVector w0;
    std::vector<char> benign_mask;
};

SimEnv build_env(const RunConfig& cfg);

// Fresh worker states. salt = 0 gives the harness streams; a nonzero
// salt derives an independent stream family (Monte Carlo trials).
std::vector<WorkerState> make_workers(const RunConfig& cfg, const SimEnv& env,
                                      std::uint64_t salt = 0);

struct MetricsRecord {
    std::int64_t t = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0; // nan for regression
    double dist_to_opt = 0.0;   // ||w_t - w*||, nan without an oracle
    ParamVector q;
    double gamma = 0.0;
    double alpha = 0.0;
    double byz_tolerance = 0.0; // latest <grad F, H^T q>, nan unless recorded
    double wall_time = 0.0;     // seconds since run start; excluded from determinism
};

struct Checkpoint {
    std::int64_t t = 0;
    ParamVector w;
    ParamVector q;
};

struct RunResult {
    std::vector<MetricsRecord> metrics;
    ParamVector final_w;
    ParamVector final_q;
    std::vector<double> tolerance_series; // s_t per iteration (theorem mode)
    std::vector<double> dist_series;      // ||w_t - w*|| per iteration (mse)
    std::vector<Checkpoint> checkpoints;  // interior (w_t, q_t) pairs (theorem mode)
    int corrupted_rows = 0;
    double initial_dist = 0.0;
    double final_dist = 0.0;
};

RunResult run(const RunConfig& cfg);

// Delimited metrics output; one header row, full round-trip precision.
std::string metrics_csv(const RunConfig& cfg, const RunResult& result);
void write_metrics_csv(const std::string& path, const RunConfig& cfg,
                       const RunResult& result);

// Parameter sweep: cross product of values x seeds, runs independent and
// executed in parallel. Axis names: n_aux, k_meta, batch_size,
// aggregator, lie_z, attack (values "none", "mixed", or "<kind>:<count>").
struct SweepRow {
    std::string axis;
    std::string value;
    std::uint64_t seed = 0;
    double final_train_loss = 0.0;
    double final_test_loss = 0.0;
    double final_test_accuracy = 0.0; // nan for regression
};

void apply_axis(RunConfig& cfg, const std::string& axis, const std::string& value);

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<std::uint64_t>& seeds);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// "%.17g" round-trip formatting used for all numeric output.
std::string format_full(double v);

} // namespace bygars
