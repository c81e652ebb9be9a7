#include "bygars/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "bygars/errors.hpp"
#include "bygars/parallel.hpp"
#include "bygars/rng.hpp"

namespace bygars::checks {

namespace {

constexpr std::uint64_t kQrecTag = stream_id::check_base + 1;
constexpr std::uint64_t kEqTag = stream_id::check_base + 2;
constexpr std::uint64_t kMartTag = stream_id::check_base + 3;
constexpr std::uint64_t kAuxTag = 0xA0;

// Floor under Monte Carlo half-widths so the deterministic sub-cases
// (zero sampling noise) are held to an absolute 1e-10 instead of 4*0.
constexpr double kDetFloor = 1e-10;

void require_theorem_mode(const RunConfig& cfg, const char* check) {
    if (cfg.mode != RunMode::theorem_check)
        throw ConfigError(std::string(check) + " requires mode = theorem_check");
}

struct TrialContext {
    std::vector<WorkerState> workers;
    RngStream aux_rng;
    AuxOracle aux;

    TrialContext(const RunConfig& cfg, const SimEnv& env, std::uint64_t salt)
        : workers(make_workers(cfg, env, salt)),
          aux_rng(cfg.seed, mix64(salt, kAuxTag)),
          aux(env.objective, env.dataset, env.split.auxiliary, cfg.aux_batch_size, aux_rng) {}
};

struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> se;
};

// Column means and standard errors over an n x dim trial buffer,
// accumulated in trial order.
ColumnStats column_stats(const std::vector<double>& buffer, std::int64_t n, std::size_t dim) {
    ColumnStats stats;
    stats.mean.assign(dim, 0.0);
    stats.se.assign(dim, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k)
            stats.mean[k] += buffer[static_cast<std::size_t>(i) * dim + k];
    for (std::size_t k = 0; k < dim; ++k) stats.mean[k] /= static_cast<double>(n);
    if (n > 1) {
        for (std::int64_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                double dev = buffer[static_cast<std::size_t>(i) * dim + k] - stats.mean[k];
                stats.se[k] += dev * dev;
            }
        for (std::size_t k = 0; k < dim; ++k)
            stats.se[k] = std::sqrt(stats.se[k] / static_cast<double>(n - 1) /
                                    static_cast<double>(n));
    }
    return stats;
}

} // namespace

TheoremCheckReport byz_tolerance_statistic(const RunConfig& cfg, const RunResult& result,
                                           std::int64_t burn_in, std::int64_t window) {
    require_theorem_mode(cfg, "byz_tolerance");
    if (cfg.aggregator.kind != AggregatorKind::bygars_pp)
        throw ConfigError("byz_tolerance requires the bygars_pp aggregator");
    const auto& s = result.tolerance_series;
    const auto n = static_cast<std::int64_t>(s.size());
    if (n < burn_in + window)
        throw ConfigError("byz_tolerance: trace shorter than burn-in plus one window");

    TheoremCheckReport rep;
    rep.check = "byz_tolerance";
    rep.values = s;
    rep.samples = n;
    rep.tolerance = "mean of every " + std::to_string(window) + "-iteration window after t=" +
                    std::to_string(burn_in) + " >= -3 SE";

    rep.running_mean.resize(s.size());
    double acc = 0.0;
    for (std::int64_t t = 0; t < n; ++t) {
        acc += s[static_cast<std::size_t>(t)];
        rep.running_mean[static_cast<std::size_t>(t)] = acc / static_cast<double>(t + 1);
    }

    double worst_z = std::numeric_limits<double>::infinity();
    for (std::int64_t a = burn_in; a + window <= n; ++a) {
        double mean = 0.0;
        for (std::int64_t t = a; t < a + window; ++t) mean += s[static_cast<std::size_t>(t)];
        mean /= static_cast<double>(window);
        double var = 0.0;
        for (std::int64_t t = a; t < a + window; ++t) {
            double dev = s[static_cast<std::size_t>(t)] - mean;
            var += dev * dev;
        }
        double se = std::sqrt(var / static_cast<double>(window - 1) /
                              static_cast<double>(window));
        double z = se > 0.0 ? mean / se : (mean >= -kDetFloor ? 1e300 : -1e300);
        worst_z = std::min(worst_z, z);
        rep.half_width.push_back(3.0 * se);
    }
    rep.statistic = worst_z;
    rep.passed = worst_z >= -3.0;
    return rep;
}

TheoremCheckReport q_recursion_check(const RunConfig& cfg0, const SimEnv& env,
                                     const ParamVector& w, const ParamVector& q0,
                                     std::int64_t t, std::int64_t n_trials) {
    const RunConfig cfg = validated(cfg0);
    require_theorem_mode(cfg, "q_recursion");
    if (n_trials < 100) throw ConfigError("q_recursion: need at least 100 trials");
    const std::size_t m = static_cast<std::size_t>(cfg.workers);
    if (q0.size() != m) throw ConfigError("q_recursion: q0 size must equal worker count");

    const ParamVector kappa = kappa_vector(cfg.attacks);
    const double alpha = alpha_at(cfg.schedules, t);
    const ParamVector pop = env.objective.population_gradient(env.dataset, env.train_rows, w);
    const double pop_sq = dot(pop, pop);
    ParamVector expected(m);
    for (std::size_t j = 0; j < m; ++j)
        expected[j] = (1.0 - alpha) * q0[j] + alpha * pop_sq * kappa[j];

    std::vector<double> buffer(static_cast<std::size_t>(n_trials) * m);
    par::for_each(n_trials, [&](std::int64_t trial) {
        TrialContext ctx(cfg, env, mix64(kQrecTag, static_cast<std::uint64_t>(trial)));
        GradientBatch h =
            attack_round(ctx.workers, env.objective, env.dataset, w, cfg.batch_size, t);
        ParamVector g = ctx.aux.grad_at(w);
        ParamVector ip = row_dots(h, g);
        for (std::size_t j = 0; j < m; ++j)
            buffer[static_cast<std::size_t>(trial) * m + j] =
                (1.0 - alpha) * q0[j] + alpha * ip[j];
    });

    ColumnStats stats = column_stats(buffer, n_trials, m);

    TheoremCheckReport rep;
    rep.check = "q_recursion";
    rep.samples = n_trials;
    rep.tolerance = "per-coordinate |mean - (1-a)q - a||gradF||^2 kappa| <= max(4 SE, 1e-10), " +
                    std::to_string(n_trials) + " trials";
    rep.values = stats.mean;
    rep.running_mean = expected;
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double allowed = std::max(4.0 * stats.se[j], kDetFloor);
        rep.half_width.push_back(allowed);
        worst = std::max(worst, std::fabs(stats.mean[j] - expected[j]) / allowed);
    }
    rep.statistic = worst;
    rep.passed = worst <= 1.0;
    rep.detail = "alpha=" + format_full(alpha) + " ||gradF||^2=" + format_full(pop_sq);
    return rep;
}

TheoremCheckReport equilibrium_check(const RunConfig& cfg0, const SimEnv& env,
                                     const ParamVector& w, std::int64_t iterations,
                                     int n_trials, double rel_tol) {
    const RunConfig cfg = validated(cfg0);
    require_theorem_mode(cfg, "equilibrium");
    if (n_trials < 1) throw ConfigError("equilibrium: need at least one trial");
    const std::size_t m = static_cast<std::size_t>(cfg.workers);

    const ParamVector kappa = kappa_vector(cfg.attacks);
    const ParamVector pop = env.objective.population_gradient(env.dataset, env.train_rows, w);
    const double pop_sq = dot(pop, pop);
    ParamVector target(m);
    for (std::size_t j = 0; j < m; ++j) target[j] = kappa[j] * pop_sq;

    std::vector<double> buffer(static_cast<std::size_t>(n_trials) * m);
    par::for_each(n_trials, [&](std::int64_t trial) {
        TrialContext ctx(cfg, env, mix64(kEqTag, static_cast<std::uint64_t>(trial)));
        ParamVector q(m, 0.0);
        for (std::int64_t t = 0; t < iterations; ++t) {
            GradientBatch h =
                attack_round(ctx.workers, env.objective, env.dataset, w, cfg.batch_size, t);
            ParamVector g = ctx.aux.grad_at(w);
            ParamVector ip = row_dots(h, g);
            const double alpha = alpha_at(cfg.schedules, t);
            for (std::size_t j = 0; j < m; ++j) q[j] = (1.0 - alpha) * q[j] + alpha * ip[j];
        }
        std::copy(q.begin(), q.end(), buffer.begin() + static_cast<std::size_t>(trial) * m);
    });

    ColumnStats stats = column_stats(buffer, n_trials, m);

    TheoremCheckReport rep;
    rep.check = "equilibrium";
    rep.samples = n_trials;
    rep.values = stats.mean;
    rep.running_mean = target;
    for (std::size_t j = 0; j < m; ++j) rep.half_width.push_back(4.0 * stats.se[j]);

    double err = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double dv = stats.mean[j] - target[j];
        err += dv * dv;
    }
    err = std::sqrt(err);
    const double target_norm = norm2(target);
    if (target_norm > 1e-12) {
        rep.statistic = err / target_norm;
        rep.tolerance = "relative error <= " + format_full(rel_tol) + " at T=" +
                        std::to_string(iterations) + ", " + std::to_string(n_trials) +
                        " trial-averaged";
        rep.passed = rep.statistic <= rel_tol;
    } else {
        // kappa = 0: the equilibrium is the origin, so the relative form
        // is undefined; fall back to an absolute tolerance.
        rep.statistic = err;
        rep.tolerance = "absolute error <= 1e-3 (zero equilibrium) at T=" +
                        std::to_string(iterations);
        rep.passed = err <= 1e-3;
        rep.detail = "zero kappa vector; absolute tolerance used";
    }
    return rep;
}

TheoremCheckReport martingale_noise_check(const RunConfig& cfg0, const SimEnv& env,
                                          const std::vector<Checkpoint>& checkpoints,
                                          std::int64_t n_trials) {
    const RunConfig cfg = validated(cfg0);
    require_theorem_mode(cfg, "martingale");
    if (n_trials < 100) throw ConfigError("martingale: need at least 100 trials");
    if (checkpoints.empty()) throw ConfigError("martingale: no checkpoints recorded");

    const std::size_t m = static_cast<std::size_t>(cfg.workers);
    const ParamVector kappa = kappa_vector(cfg.attacks);

    TheoremCheckReport rep;
    rep.check = "martingale";
    rep.samples = n_trials;
    rep.tolerance = "per-coordinate |mean u|, |mean v| <= max(4 SE, 1e-10), " +
                    std::to_string(n_trials) + " trials x " +
                    std::to_string(checkpoints.size()) + " checkpoints";

    double worst = 0.0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const Checkpoint& cp = checkpoints[c];
        const ParamVector pop =
            env.objective.population_gradient(env.dataset, env.train_rows, cp.w);
        const double pop_sq = dot(pop, pop);
        const double kq = dot(kappa, cp.q);
        const std::size_t dim = pop.size();

        std::vector<double> u_buf(static_cast<std::size_t>(n_trials) * dim);
        std::vector<double> v_buf(static_cast<std::size_t>(n_trials) * m);
        par::for_each(n_trials, [&](std::int64_t trial) {
            TrialContext ctx(cfg, env,
                             mix64(kMartTag, mix64(static_cast<std::uint64_t>(c),
                                                   static_cast<std::uint64_t>(trial))));
            GradientBatch h = attack_round(ctx.workers, env.objective, env.dataset, cp.w,
                                           cfg.batch_size, cp.t);
            ParamVector g = ctx.aux.grad_at(cp.w);
            ParamVector agg = weighted_row_sum(h, cp.q);
            ParamVector ip = row_dots(h, g);
            double* u = u_buf.data() + static_cast<std::size_t>(trial) * dim;
            for (std::size_t k = 0; k < dim; ++k) u[k] = kq * pop[k] - agg[k];
            double* v = v_buf.data() + static_cast<std::size_t>(trial) * m;
            for (std::size_t j = 0; j < m; ++j) v[j] = ip[j] - kappa[j] * pop_sq;
        });

        ColumnStats us = column_stats(u_buf, n_trials, dim);
        ColumnStats vs = column_stats(v_buf, n_trials, m);
        double cp_worst = 0.0;
        for (std::size_t k = 0; k < dim; ++k)
            cp_worst = std::max(cp_worst, std::fabs(us.mean[k]) /
                                              std::max(4.0 * us.se[k], kDetFloor));
        for (std::size_t j = 0; j < m; ++j)
            cp_worst = std::max(cp_worst, std::fabs(vs.mean[j]) /
                                              std::max(4.0 * vs.se[j], kDetFloor));
        rep.values.push_back(cp_worst);
        worst = std::max(worst, cp_worst);
    }
    rep.statistic = worst;
    rep.passed = worst <= 1.0;
    return rep;
}

TheoremCheckReport convergence_check(const RunConfig& cfg, const RunResult& result,
                                     double ratio_tol) {
    require_theorem_mode(cfg, "convergence");
    if (result.dist_series.empty())
        throw ConfigError("convergence: run has no distance trace (needs the mse objective)");

    TheoremCheckReport rep;
    rep.check = "convergence";
    rep.samples = cfg.iterations;
    rep.tolerance =
        "||w_T - w*|| / ||w_0 - w*|| <= " + format_full(ratio_tol) + " at T=" +
        std::to_string(cfg.iterations);
    for (const auto& rec : result.metrics) rep.values.push_back(rec.dist_to_opt);
    rep.statistic = result.final_dist / result.initial_dist;
    rep.passed = rep.statistic <= ratio_tol;

    // The two-timescale analysis wants gamma_t / alpha_t -> 0 and
    // square-summable steps; flag schedules outside that regime.
    const auto& s = cfg.schedules;
    if (!(s.gamma_exponent > s.alpha_exponent))
        rep.detail += "warning: gamma/alpha does not vanish (gamma_exponent <= alpha_exponent); ";
    if (!(s.gamma_exponent > 0.5 && s.gamma_exponent <= 1.0))
        rep.detail += "warning: gamma_exponent outside (0.5, 1]; ";
    if (!(s.alpha_exponent > 0.5 && s.alpha_exponent <= 1.0))
        rep.detail += "warning: alpha_exponent outside (0.5, 1]; ";
    return rep;
}

std::vector<TheoremCheckReport> run_checks(const RunConfig& cfg0,
                                           const std::vector<std::string>& names,
                                           std::int64_t n_trials) {
    if (names.empty()) throw ConfigError("verify: no checks requested");
    const RunConfig cfg = validated(cfg0);
    for (const auto& name : names) {
        if (name != "byz_tolerance" && name != "q_recursion" && name != "equilibrium" &&
            name != "martingale" && name != "convergence")
            throw ConfigError("unknown check: " + name);
    }

    const SimEnv env = build_env(cfg);
    bool need_run = false;
    for (const auto& name : names)
        need_run |= name == "byz_tolerance" || name == "martingale" || name == "convergence";

    RunResult trace;
    if (need_run) trace = run(cfg);

    std::vector<TheoremCheckReport> reports;
    for (const auto& name : names) {
        if (name == "byz_tolerance") {
            reports.push_back(byz_tolerance_statistic(cfg, trace));
        } else if (name == "q_recursion") {
            ParamVector q0(static_cast<std::size_t>(cfg.workers), 0.0);
            reports.push_back(q_recursion_check(cfg, env, env.w0, q0, 0, n_trials));
        } else if (name == "equilibrium") {
            reports.push_back(equilibrium_check(cfg, env, env.w0));
        } else if (name == "martingale") {
            reports.push_back(martingale_noise_check(cfg, env, trace.checkpoints,
                                                     std::min<std::int64_t>(n_trials, 2000)));
        } else {
            reports.push_back(convergence_check(cfg, trace));
        }
    }
    return reports;
}

std::string reports_jsonl(const std::vector<TheoremCheckReport>& reports) {
    std::string out;
    for (const auto& rep : reports) {
        nlohmann::json j;
        j["check"] = rep.check;
        j["passed"] = rep.passed;
        j["statistic"] = rep.statistic;
        j["tolerance"] = rep.tolerance;
        j["samples"] = rep.samples;
        j["values"] = rep.values;
        j["running_mean"] = rep.running_mean;
        j["half_width"] = rep.half_width;
        j["detail"] = rep.detail;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string reports_summary(const std::vector<TheoremCheckReport>& reports) {
    std::string out;
    for (const auto& rep : reports) {
        out += rep.passed ? "[PASS] " : "[FAIL] ";
        out += rep.check + ": statistic=" + format_full(rep.statistic) +
               " (" + rep.tolerance + ", samples=" + std::to_string(rep.samples) + ")";
        if (!rep.detail.empty()) out += " -- " + rep.detail;
        out += '\n';
    }
    return out;
}

} // namespace bygars::checks
