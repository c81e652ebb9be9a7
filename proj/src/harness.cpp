#include "bygars/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bygars/errors.hpp"
#include "bygars/parallel.hpp"
#include "bygars/rng.hpp"

namespace bygars {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(RunMode mode) {
    return mode == RunMode::empirical ? "empirical" : "theorem_check";
}

RunMode run_mode_from_string(const std::string& name) {
    if (name == "empirical") return RunMode::empirical;
    if (name == "theorem_check") return RunMode::theorem_check;
    throw ConfigError("unknown mode: " + name);
}

double resolved_l2(const RunConfig& cfg) {
    if (cfg.l2_reg) return *cfg.l2_reg;
    return cfg.mode == RunMode::theorem_check ? 1e-3 : 0.0;
}

RunConfig validated(RunConfig cfg) {
    validate(cfg.task);
    validate(cfg.schedules);
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
    if (cfg.attacks.empty())
        cfg.attacks.assign(static_cast<std::size_t>(cfg.workers), AttackSpec::of(AttackKind::benign));
    if (static_cast<int>(cfg.attacks.size()) != cfg.workers)
        throw ConfigError("attacks list length must equal the worker count");
    int benign = 0;
    bool collusion = false;
    for (const auto& a : cfg.attacks) {
        validate(a);
        benign += a.kind == AttackKind::benign ? 1 : 0;
        collusion |= is_collusion(a.kind);
        if (a.kind == AttackKind::label_flip && cfg.task.kind != TaskKind::classification)
            throw ConfigError("label_flip requires a classification task");
    }
    if (collusion && benign == 0)
        throw ConfigError("collusion attacks (lie/inner_product/ofom/paf) require at least "
                          "one benign worker");
    if (cfg.iterations < 1) throw ConfigError("iterations must be at least 1");
    if (cfg.eval_every < 1) throw ConfigError("eval_every must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.aux_batch_size < 1) throw ConfigError("aux_batch_size must be at least 1");
    if (cfg.aggregator.kind == AggregatorKind::bygars && cfg.aggregator.k_meta < 1)
        throw ConfigError("aggregator.k_meta must be at least 1");
    if (!(cfg.aggregator.aux_target_norm > 0.0))
        throw ConfigError("aggregator.aux_target_norm must be positive");
    if (!(resolved_l2(cfg) >= 0.0)) throw ConfigError("l2_reg must be nonnegative");

    const std::int64_t pool = cfg.task.n_total - cfg.task.n_test;
    if (cfg.mode == RunMode::theorem_check) {
        for (const auto& a : cfg.attacks)
            if (a.kind != AttackKind::benign && a.kind != AttackKind::scaled_multiplicative)
                throw ConfigError("theorem_check mode allows only benign and "
                                  "scaled_multiplicative workers");
        ParamVector kappa = kappa_vector(cfg.attacks);
        bool any_signal = false;
        for (double k : kappa) any_signal |= k != 0.0;
        if (!any_signal)
            throw ConfigError("theorem_check mode needs at least one worker with kappa != 0");
        if (cfg.batch_size > pool) throw ConfigError("batch_size exceeds the training pool");
        if (cfg.aux_batch_size > pool)
            throw ConfigError("aux_batch_size exceeds the training pool");
    } else {
        const std::int64_t train = pool - cfg.task.n_aux;
        if (cfg.batch_size > train / cfg.workers)
            throw ConfigError("batch_size exceeds the smallest worker shard");
        if (cfg.aux_batch_size > cfg.task.n_aux)
            throw ConfigError("aux_batch_size exceeds n_aux");
    }
    return cfg;
}

SimEnv build_env(const RunConfig& cfg) {
    SimEnv env;
    RngStream data_rng(cfg.seed, stream_id::data_gen);
    if (cfg.task.kind == TaskKind::regression) {
        auto gen = generate_regression(cfg.task, data_rng);
        env.dataset = std::move(gen.dataset);
        env.theta_star = std::move(gen.theta_star);
    } else {
        env.dataset = generate_classification(cfg.task, data_rng);
    }

    RngStream part_rng(cfg.seed, stream_id::partition);
    if (cfg.mode == RunMode::empirical) {
        env.split = partition(env.dataset, cfg.workers, cfg.task.n_aux, cfg.task.n_test, part_rng);
        for (const auto& shard : env.split.worker_shards)
            env.train_rows.insert(env.train_rows.end(), shard.begin(), shard.end());
        env.train_rows.insert(env.train_rows.end(), env.split.auxiliary.begin(),
                              env.split.auxiliary.end());
    } else {
        // One shared pool: every worker and the auxiliary oracle sample
        // from the same rows, so all stochastic gradients are unbiased
        // for the pool gradient the checks use as grad F.
        DataSplit pooled = partition(env.dataset, 1, 0, cfg.task.n_test, part_rng);
        env.train_rows = pooled.worker_shards[0];
        env.split.test = std::move(pooled.test);
        env.split.auxiliary = env.train_rows;
        env.split.worker_shards.assign(static_cast<std::size_t>(cfg.workers), env.train_rows);
    }

    env.objective = Objective::for_dataset(env.dataset, resolved_l2(cfg));
    if (env.objective.kind == ObjectiveKind::mse_linear)
        env.w_star = closed_form_optimum(env.objective, env.dataset, env.train_rows);

    RngStream init_rng(cfg.seed, stream_id::init_w);
    const double init_scale = env.objective.kind == ObjectiveKind::mse_linear ? 1.0 : 0.1;
    env.w0.resize(static_cast<std::size_t>(env.objective.model_dim()));
    for (double& v : env.w0) v = init_scale * init_rng.normal();

    env.benign_mask.resize(cfg.attacks.size());
    for (std::size_t j = 0; j < cfg.attacks.size(); ++j)
        env.benign_mask[j] = cfg.attacks[j].kind == AttackKind::benign ? 1 : 0;
    return env;
}

std::vector<WorkerState> make_workers(const RunConfig& cfg, const SimEnv& env,
                                      std::uint64_t salt) {
    std::vector<WorkerState> workers;
    workers.reserve(static_cast<std::size_t>(cfg.workers));
    for (int j = 0; j < cfg.workers; ++j) {
        std::uint64_t id = salt == 0 ? stream_id::worker_base + static_cast<std::uint64_t>(j)
                                     : mix64(salt, static_cast<std::uint64_t>(j));
        workers.emplace_back(j, env.split.worker_shards[static_cast<std::size_t>(j)],
                             cfg.attacks[static_cast<std::size_t>(j)], RngStream(cfg.seed, id));
    }
    return workers;
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double dv = a[i] - b[i];
        acc += dv * dv;
    }
    return std::sqrt(acc);
}

} // namespace

RunResult run(const RunConfig& raw) {
    const RunConfig cfg = validated(raw);
    const SimEnv env = build_env(cfg);
    auto workers = make_workers(cfg, env);

    RngStream aux_rng(cfg.seed, stream_id::aux_server);
    AuxOracle aux(env.objective, env.dataset, env.split.auxiliary, cfg.aux_batch_size, aux_rng);

    Aggregator agg(cfg.aggregator.kind, cfg.workers, cfg.schedules);
    agg.k_meta = cfg.aggregator.k_meta;
    agg.reuse_aux_batch = cfg.aggregator.reuse_aux_batch;
    agg.aux_target_norm = cfg.aggregator.aux_target_norm;
    agg.normalize_gradients = cfg.mode == RunMode::empirical;

    const bool theorem = cfg.mode == RunMode::theorem_check;
    const bool record_stat = theorem && cfg.record_tolerance_stat;
    const bool classification = env.objective.kind == ObjectiveKind::softmax_linear;
    const std::vector<char>* mask =
        cfg.aggregator.kind == AggregatorKind::baseline_oracle ? &env.benign_mask : nullptr;

    // Interior checkpoints for the noise re-simulation checks.
    std::vector<std::int64_t> checkpoint_ts;
    if (theorem) {
        for (int j = 1; j <= 10; ++j) {
            std::int64_t tc = cfg.iterations * j / 11;
            if (tc >= 1 && (checkpoint_ts.empty() || checkpoint_ts.back() != tc))
                checkpoint_ts.push_back(tc);
        }
    }

    RunResult result;
    ParamVector w = env.w0;
    result.initial_dist = env.w_star.empty() ? kNaN : distance(w, env.w_star);
    double last_stat = kNaN;
    bool ball_warned = false;
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    std::size_t next_checkpoint = 0;
    for (std::int64_t t = 0;; ++t) {
        if (t % cfg.eval_every == 0 || t == cfg.iterations) {
            MetricsRecord rec;
            rec.t = t;
            rec.train_loss = env.objective.loss(env.dataset, env.train_rows, w);
            rec.test_loss = env.objective.loss(env.dataset, env.split.test, w);
            rec.test_accuracy =
                classification ? env.objective.accuracy(env.dataset, env.split.test, w) : kNaN;
            rec.dist_to_opt = env.w_star.empty() ? kNaN : distance(w, env.w_star);
            rec.q = agg.q;
            rec.gamma = gamma_at(cfg.schedules, t);
            rec.alpha = alpha_at(cfg.schedules, t);
            rec.byz_tolerance = last_stat;
            rec.wall_time = elapsed();
            result.metrics.push_back(std::move(rec));
        }
        if (t == cfg.iterations) break;

        if (next_checkpoint < checkpoint_ts.size() && t == checkpoint_ts[next_checkpoint]) {
            result.checkpoints.push_back({t, w, agg.q});
            ++next_checkpoint;
        }

        GradientBatch h = attack_round(workers, env.objective, env.dataset, w, cfg.batch_size, t);
        if (record_stat) {
            ParamVector pop = env.objective.population_gradient(env.dataset, env.train_rows, w);
            last_stat = dot(pop, weighted_row_sum(h, agg.q));
            result.tolerance_series.push_back(last_stat);
        }
        if (cfg.mode == RunMode::empirical)
            result.corrupted_rows += apply_norm_policy(cfg.aggregator.kind, h, nullptr);

        w = agg.step(w, h, aux, t, mask);
        if (!all_finite(w))
            throw SimError("run: non-finite parameters after iteration " + std::to_string(t));
        if (!ball_warned && norm2(w) > cfg.ball_radius_warn) {
            std::fprintf(stderr,
                         "warning: ||w|| exceeded %g at iteration %lld; bounded-iterate "
                         "assumption of the convergence analysis is at risk\n",
                         cfg.ball_radius_warn, static_cast<long long>(t));
            ball_warned = true;
        }
        if (!env.w_star.empty()) result.dist_series.push_back(distance(w, env.w_star));
    }

    result.final_w = std::move(w);
    result.final_q = agg.q;
    result.final_dist = env.w_star.empty() ? kNaN : result.dist_series.back();
    return result;
}

std::string format_full(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string metrics_csv(const RunConfig& cfg, const RunResult& result) {
    std::string out = "t,train_loss,test_loss,test_accuracy,dist_to_opt";
    for (int j = 0; j < cfg.workers; ++j) out += ",q_" + std::to_string(j);
    out += ",gamma,alpha,byz_tolerance,wall_time\n";
    for (const auto& rec : result.metrics) {
        out += std::to_string(rec.t);
        out += ',' + format_full(rec.train_loss);
        out += ',' + format_full(rec.test_loss);
        out += ',' + format_full(rec.test_accuracy);
        out += ',' + format_full(rec.dist_to_opt);
        for (double qv : rec.q) out += ',' + format_full(qv);
        out += ',' + format_full(rec.gamma);
        out += ',' + format_full(rec.alpha);
        out += ',' + format_full(rec.byz_tolerance);
        out += ',' + format_full(rec.wall_time);
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::string& path, const RunConfig& cfg, const RunResult& result) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimError("cannot open metrics file for writing: " + path);
    f << metrics_csv(cfg, result);
}

void apply_axis(RunConfig& cfg, const std::string& axis, const std::string& value) {
    auto as_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("sweep: value '" + s + "' is not an integer");
        }
    };
    auto as_double = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("sweep: value '" + s + "' is not a number");
        }
    };

    if (axis == "n_aux") {
        cfg.task.n_aux = static_cast<int>(as_int(value));
    } else if (axis == "k_meta") {
        cfg.aggregator.k_meta = static_cast<int>(as_int(value));
    } else if (axis == "batch_size") {
        cfg.batch_size = static_cast<int>(as_int(value));
    } else if (axis == "aggregator") {
        cfg.aggregator.kind = aggregator_kind_from_string(value);
    } else if (axis == "lie_z") {
        double z = as_double(value);
        bool any = false;
        for (auto& a : cfg.attacks) {
            if (a.kind == AttackKind::lie) {
                a.z = z;
                any = true;
            }
        }
        if (!any) throw ConfigError("sweep: lie_z axis needs lie attackers in the config");
    } else if (axis == "attack") {
        if (value == "none") {
            cfg.attacks.assign(static_cast<std::size_t>(cfg.workers),
                               AttackSpec::of(AttackKind::benign));
        } else if (value == "mixed") {
            cfg.attacks = mixed_attack_default(cfg.workers);
        } else {
            auto colon = value.find(':');
            if (colon == std::string::npos)
                throw ConfigError("sweep: attack value must be none, mixed, or kind:count");
            AttackKind kind = attack_kind_from_string(value.substr(0, colon));
            int count = static_cast<int>(as_int(value.substr(colon + 1)));
            if (count < 0 || count > cfg.workers)
                throw ConfigError("sweep: attacker count out of range");
            cfg.attacks.assign(static_cast<std::size_t>(cfg.workers),
                               AttackSpec::of(AttackKind::benign));
            for (int j = 0; j < count; ++j)
                cfg.attacks[static_cast<std::size_t>(cfg.workers - 1 - j)] = AttackSpec::of(kind);
        }
    } else {
        throw ConfigError("unknown sweep axis: " + axis);
    }
}

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& axis,
                            const std::vector<std::string>& values,
                            const std::vector<std::uint64_t>& seeds) {
    if (values.empty()) throw ConfigError("sweep: values list is empty");
    if (seeds.empty()) throw ConfigError("sweep: seeds list is empty");

    // Validate the whole grid before burning time on runs.
    std::vector<RunConfig> grid;
    std::vector<SweepRow> rows;
    for (const auto& value : values) {
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            apply_axis(cfg, axis, value);
            cfg.seed = seed;
            grid.push_back(validated(cfg));
            rows.push_back({axis, value, seed, 0.0, 0.0, 0.0});
        }
    }
    par::for_each(static_cast<std::int64_t>(grid.size()), [&](std::int64_t i) {
        RunResult res = run(grid[static_cast<std::size_t>(i)]);
        const MetricsRecord& last = res.metrics.back();
        auto& row = rows[static_cast<std::size_t>(i)];
        row.final_train_loss = last.train_loss;
        row.final_test_loss = last.test_loss;
        row.final_test_accuracy = last.test_accuracy;
    });
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "axis,value,seed,final_train_loss,final_test_loss,final_test_accuracy\n";
    for (const auto& r : rows) {
        out += r.axis + ',' + r.value + ',' + std::to_string(r.seed);
        out += ',' + format_full(r.final_train_loss);
        out += ',' + format_full(r.final_test_loss);
        out += ',' + format_full(r.final_test_accuracy);
        out += '\n';
    }
    return out;
}

} // namespace bygars
