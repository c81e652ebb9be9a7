#pragma once

// Empirical statistics for the convergence theory of the reputation
// update, run in theorem_check mode (multiplicative-noise workers, no
// normalization, strongly convex objective):
//
//   byz_tolerance   - windowed running mean of <grad F(w_t), H_t^T q_t> is
//                     not significantly negative.
//   q_recursion     - one-step conditional mean of q matches
//                     (1 - alpha) q + alpha ||grad F(w)||^2 kappa.
//   equilibrium     - the fixed-w reputation iteration settles at
//                     kappa ||grad F(w)||^2.
//   martingale      - the update noises u_t (parameter) and v_t
//                     (reputation) have conditionally zero mean.
//   convergence     - ||w_T - w*|| shrinks below a stated fraction of
//                     the initial distance, w* from the closed form.
//
// Every pass/fail cites its tolerance and sample count; Monte Carlo
// trials draw from streams keyed by (check, trial) so reports do not
// depend on scheduling.

#include <cstdint>
#include <string>
#include <vector>

#include "bygars/harness.hpp"

namespace bygars::checks {

struct TheoremCheckReport {
    std::string check;
    bool passed = false;
    double statistic = 0.0;          // headline value (worst z, relative error, ratio)
    std::string tolerance;           // what was required, with sample counts
    std::int64_t samples = 0;
    std::vector<double> values;      // per-iteration or per-coordinate values
    std::vector<double> running_mean;
    std::vector<double> half_width;  // Monte Carlo confidence half-widths
    std::string detail;
};

// Windowed descent-correlation test over a recorded bygars_pp trace.
TheoremCheckReport byz_tolerance_statistic(const RunConfig& cfg, const RunResult& result,
                                           std::int64_t burn_in = 50, std::int64_t window = 200);

// Monte Carlo one-step reputation recursion at frozen (w, q).
TheoremCheckReport q_recursion_check(const RunConfig& cfg, const SimEnv& env,
                                     const ParamVector& w, const ParamVector& q0,
                                     std::int64_t t, std::int64_t n_trials);

// Fixed-w reputation iteration, trial-averaged terminal value.
TheoremCheckReport equilibrium_check(const RunConfig& cfg, const SimEnv& env,
                                     const ParamVector& w, std::int64_t iterations = 5000,
                                     int n_trials = 8, double rel_tol = 0.05);

// Conditional zero-mean test of the update noises at trace checkpoints.
TheoremCheckReport martingale_noise_check(const RunConfig& cfg, const SimEnv& env,
                                          const std::vector<Checkpoint>& checkpoints,
                                          std::int64_t n_trials);

// Terminal-distance contraction of a recorded run.
TheoremCheckReport convergence_check(const RunConfig& cfg, const RunResult& result,
                                     double ratio_tol = 0.05);

// Runs the named checks end to end (building whatever runs they need)
// and returns the reports. Names: byz_tolerance, q_recursion,
// equilibrium, martingale, convergence.
std::vector<TheoremCheckReport> run_checks(const RunConfig& cfg,
                                           const std::vector<std::string>& names,
                                           std::int64_t n_trials = 10000);

// One JSON object per line, and a one-line-per-check console summary.
std::string reports_jsonl(const std::vector<TheoremCheckReport>& reports);
std::string reports_summary(const std::vector<TheoremCheckReport>& reports);

} // namespace bygars::checks
