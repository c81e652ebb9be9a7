// Command-line front end: run a single experiment, sweep a parameter
// axis, or execute theorem checks against a config.
//
// Exit codes: 0 success, 1 config error, 2 runtime error,
// 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bygars/checks.hpp"
#include "bygars/config.hpp"
#include "bygars/errors.hpp"
#include "bygars/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

int cmd_run(const std::string& config_path, std::int64_t seed_override,
            const std::string& out_dir) {
    bygars::RunConfig cfg = bygars::load_config_file(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg = bygars::validated(cfg);

    bygars::RunResult result = bygars::run(cfg);
    const std::string stem = fs::path(config_path).stem().string();
    const std::string metrics_file =
        out_path(out_dir, stem + "_seed" + std::to_string(cfg.seed) + ".csv");
    bygars::write_metrics_csv(metrics_file, cfg, result);

    const auto& last = result.metrics.back();
    std::cout << "run finished: T=" << cfg.iterations << " seed=" << cfg.seed << "\n";
    std::cout << "  final train_loss=" << bygars::format_full(last.train_loss)
              << " test_loss=" << bygars::format_full(last.test_loss);
    if (cfg.task.kind == bygars::TaskKind::classification)
        std::cout << " test_accuracy=" << bygars::format_full(last.test_accuracy);
    std::cout << "\n";
    if (cfg.mode == bygars::RunMode::empirical) {
        double shard = std::floor(static_cast<double>(cfg.task.n_total - cfg.task.n_test -
                                                      cfg.task.n_aux) /
                                  cfg.workers);
        std::cout << "  iterations per epoch ~ " << shard / cfg.batch_size << "\n";
    }
    if (result.corrupted_rows > 0)
        std::cout << "  corrupted gradient rows zeroed: " << result.corrupted_rows << "\n";
    std::cout << "  metrics: " << metrics_file << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<std::string>& values, const std::vector<std::uint64_t>& seeds,
              const std::string& out_dir) {
    bygars::RunConfig base = bygars::load_config_file(config_path);
    auto rows = bygars::sweep(base, axis, values, seeds);
    const std::string table = bygars::sweep_csv(rows);
    const std::string file = out_path(out_dir, "sweep_" + axis + ".csv");
    std::ofstream f(file, std::ios::binary);
    if (!f) throw bygars::SimError("cannot open sweep output: " + file);
    f << table;
    std::cout << table;
    std::cout << "sweep table: " << file << "\n";
    return 0;
}

int cmd_verify(const std::string& config_path, const std::vector<std::string>& check_names,
               std::int64_t trials, const std::string& out_dir) {
    bygars::RunConfig cfg = bygars::load_config_file(config_path);
    auto reports = bygars::checks::run_checks(cfg, check_names, trials);

    const std::string file = out_path(out_dir, "verify_report.jsonl");
    std::ofstream f(file, std::ios::binary);
    if (!f) throw bygars::SimError("cannot open report file: " + file);
    f << bygars::checks::reports_jsonl(reports);
    std::cout << bygars::checks::reports_summary(reports);
    std::cout << "report: " << file << "\n";

    for (const auto& rep : reports)
        if (!rep.passed) return 3;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-resilient distributed SGD simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;

    auto* run_cmd = app.add_subcommand("run", "execute one experiment");
    run_cmd->add_option("--config", config_path, "config file (JSON)")->required();
    run_cmd->add_option("--seed", seed_override, "override the config seed");
    run_cmd->add_option("--out", out_dir, "output directory");

    std::string axis;
    std::vector<std::string> values;
    std::vector<std::uint64_t> seeds;
    auto* sweep_cmd = app.add_subcommand("sweep", "cross product of axis values and seeds");
    sweep_cmd->add_option("--config", config_path, "config file (JSON)")->required();
    sweep_cmd->add_option("--axis", axis,
                          "n_aux | k_meta | batch_size | aggregator | lie_z | attack")
        ->required();
    sweep_cmd->add_option("--values", values, "axis values")->required()->expected(-1);
    sweep_cmd->add_option("--seeds", seeds, "seeds")->required()->expected(-1);
    sweep_cmd->add_option("--out", out_dir, "output directory");

    std::vector<std::string> check_names;
    std::int64_t trials = 10000;
    auto* verify_cmd = app.add_subcommand("verify", "run theorem checks");
    verify_cmd->add_option("--config", config_path, "config file (JSON)")->required();
    verify_cmd
        ->add_option("--checks", check_names,
                     "byz_tolerance | q_recursion | equilibrium | martingale | convergence")
        ->required()
        ->expected(-1);
    verify_cmd->add_option("--trials", trials, "Monte Carlo trials per check");
    verify_cmd->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, seed_override, out_dir);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path, axis, values, seeds, out_dir);
        return cmd_verify(config_path, check_names, trials, out_dir);
    } catch (const bygars::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
