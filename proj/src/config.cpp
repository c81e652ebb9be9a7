#include "bygars/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bygars/errors.hpp"

namespace bygars {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double get_num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
    return obj[key].get<double>();
}

std::int64_t get_int(const json& obj, const char* key, std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    return obj[key].get<std::int64_t>();
}

bool get_bool(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    return obj[key].get<bool>();
}

std::string get_str(const json& obj, const char* key) {
    if (!obj.contains(key) || !obj[key].is_string())
        throw ConfigError(std::string("missing or non-string key '") + key + "'");
    return obj[key].get<std::string>();
}

SyntheticSpec task_from_json(const json& j) {
    reject_unknown(j, {"kind", "d", "N", "n_test", "n_aux", "noise_std", "theta_star_mean", "K"},
                   "task");
    SyntheticSpec spec;
    std::string kind = get_str(j, "kind");
    if (kind == "regression")
        spec.kind = TaskKind::regression;
    else if (kind == "classification")
        spec.kind = TaskKind::classification;
    else
        throw ConfigError("task.kind must be regression or classification");
    spec.d = static_cast<int>(get_int(j, "d", spec.d));
    spec.n_total = get_int(j, "N", spec.n_total);
    spec.n_test = static_cast<int>(get_int(j, "n_test", spec.n_test));
    spec.n_aux = static_cast<int>(get_int(j, "n_aux", spec.n_aux));
    spec.noise_std = get_num(j, "noise_std", spec.noise_std);
    spec.theta_star_mean = get_num(j, "theta_star_mean", spec.theta_star_mean);
    spec.num_classes = static_cast<int>(get_int(j, "K", spec.num_classes));
    return spec;
}

json task_to_json(const SyntheticSpec& spec) {
    json j;
    j["kind"] = spec.kind == TaskKind::regression ? "regression" : "classification";
    j["d"] = spec.d;
    j["N"] = spec.n_total;
    j["n_test"] = spec.n_test;
    j["n_aux"] = spec.n_aux;
    j["noise_std"] = spec.noise_std;
    j["theta_star_mean"] = spec.theta_star_mean;
    if (spec.kind == TaskKind::classification) j["K"] = spec.num_classes;
    return j;
}

AttackSpec attack_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("each attack must be an object");
    AttackSpec spec;
    spec.kind = attack_kind_from_string(get_str(j, "kind"));
    const std::string where = std::string("attack '") + to_string(spec.kind) + "'";
    switch (spec.kind) {
        case AttackKind::benign:
        case AttackKind::label_flip:
            reject_unknown(j, {"kind"}, where);
            break;
        case AttackKind::sign_flip:
        case AttackKind::inner_product:
            reject_unknown(j, {"kind", "scale"}, where);
            spec.scale = get_num(j, "scale", spec.scale);
            break;
        case AttackKind::random_sign_flip:
            reject_unknown(j, {"kind", "mean", "std"}, where);
            spec.mean = get_num(j, "mean", spec.mean);
            spec.stddev = get_num(j, "std", spec.stddev);
            break;
        case AttackKind::gaussian:
            reject_unknown(j, {"kind", "noise_std"}, where);
            spec.noise_std = get_num(j, "noise_std", spec.noise_std);
            break;
        case AttackKind::constant:
            reject_unknown(j, {"kind", "value"}, where);
            spec.value = get_num(j, "value", spec.value);
            break;
        case AttackKind::lie:
            reject_unknown(j, {"kind", "z"}, where);
            spec.z = get_num(j, "z", spec.z);
            break;
        case AttackKind::ofom:
        case AttackKind::paf:
            reject_unknown(j, {"kind", "magnitude"}, where);
            spec.magnitude = get_num(j, "magnitude", spec.magnitude);
            break;
        case AttackKind::scaled_multiplicative:
            reject_unknown(j, {"kind", "kappa_mean", "kappa_std", "kappa_max"}, where);
            spec.kappa_mean = get_num(j, "kappa_mean", spec.kappa_mean);
            spec.kappa_std = get_num(j, "kappa_std", spec.kappa_std);
            spec.kappa_max = get_num(j, "kappa_max", spec.kappa_max);
            break;
    }
    validate(spec);
    return spec;
}

json attack_to_json(const AttackSpec& spec) {
    json j;
    j["kind"] = to_string(spec.kind);
    switch (spec.kind) {
        case AttackKind::sign_flip:
        case AttackKind::inner_product: j["scale"] = spec.scale; break;
        case AttackKind::random_sign_flip:
            j["mean"] = spec.mean;
            j["std"] = spec.stddev;
            break;
        case AttackKind::gaussian: j["noise_std"] = spec.noise_std; break;
        case AttackKind::constant: j["value"] = spec.value; break;
        case AttackKind::lie: j["z"] = spec.z; break;
        case AttackKind::ofom:
        case AttackKind::paf: j["magnitude"] = spec.magnitude; break;
        case AttackKind::scaled_multiplicative:
            j["kappa_mean"] = spec.kappa_mean;
            j["kappa_std"] = spec.kappa_std;
            j["kappa_max"] = spec.kappa_max;
            break;
        default: break;
    }
    return j;
}

} // namespace

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(j,
                   {"schema_version", "mode", "task", "workers", "attacks", "aggregator",
                    "schedules", "batch_size", "aux_batch_size", "iterations", "eval_every",
                    "seed", "l2_reg", "record_tolerance_stat", "ball_radius_warn"},
                   "config");
    if (get_int(j, "schema_version", -1) != 1)
        throw ConfigError("config requires schema_version = 1");

    RunConfig cfg;
    if (j.contains("mode")) cfg.mode = run_mode_from_string(get_str(j, "mode"));
    if (!j.contains("task")) throw ConfigError("config is missing 'task'");
    cfg.task = task_from_json(j["task"]);
    cfg.workers = static_cast<int>(get_int(j, "workers", cfg.workers));

    if (j.contains("attacks")) {
        if (!j["attacks"].is_array()) throw ConfigError("attacks must be an array");
        for (const auto& a : j["attacks"]) cfg.attacks.push_back(attack_from_json(a));
    }

    if (j.contains("aggregator")) {
        const json& ag = j["aggregator"];
        reject_unknown(ag, {"kind", "k_meta", "reuse_aux_batch", "aux_target_norm"}, "aggregator");
        cfg.aggregator.kind = aggregator_kind_from_string(get_str(ag, "kind"));
        cfg.aggregator.k_meta = static_cast<int>(get_int(ag, "k_meta", cfg.aggregator.k_meta));
        cfg.aggregator.reuse_aux_batch =
            get_bool(ag, "reuse_aux_batch", cfg.aggregator.reuse_aux_batch);
        cfg.aggregator.aux_target_norm =
            get_num(ag, "aux_target_norm", cfg.aggregator.aux_target_norm);
    }

    if (j.contains("schedules")) {
        const json& sc = j["schedules"];
        reject_unknown(sc, {"gamma0", "beta", "alpha0", "beta_m", "gamma_exponent", "alpha_exponent"},
                       "schedules");
        cfg.schedules.gamma0 = get_num(sc, "gamma0", cfg.schedules.gamma0);
        cfg.schedules.beta = get_num(sc, "beta", cfg.schedules.beta);
        cfg.schedules.alpha0 = get_num(sc, "alpha0", cfg.schedules.alpha0);
        cfg.schedules.beta_m = get_num(sc, "beta_m", cfg.schedules.beta_m);
        cfg.schedules.gamma_exponent = get_num(sc, "gamma_exponent", cfg.schedules.gamma_exponent);
        cfg.schedules.alpha_exponent = get_num(sc, "alpha_exponent", cfg.schedules.alpha_exponent);
    }

    cfg.batch_size = static_cast<int>(get_int(j, "batch_size", cfg.batch_size));
    cfg.aux_batch_size = static_cast<int>(get_int(j, "aux_batch_size", cfg.aux_batch_size));
    cfg.iterations = get_int(j, "iterations", cfg.iterations);
    cfg.eval_every = static_cast<int>(get_int(j, "eval_every", cfg.eval_every));
    cfg.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
    if (j.contains("l2_reg")) cfg.l2_reg = get_num(j, "l2_reg", 0.0);
    cfg.record_tolerance_stat = get_bool(j, "record_tolerance_stat", cfg.record_tolerance_stat);
    cfg.ball_radius_warn = get_num(j, "ball_radius_warn", cfg.ball_radius_warn);
    return validated(cfg);
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["mode"] = to_string(cfg.mode);
    j["task"] = task_to_json(cfg.task);
    j["workers"] = cfg.workers;
    json attacks = json::array();
    for (const auto& a : cfg.attacks) attacks.push_back(attack_to_json(a));
    j["attacks"] = attacks;
    j["aggregator"] = {{"kind", to_string(cfg.aggregator.kind)},
                       {"k_meta", cfg.aggregator.k_meta},
                       {"reuse_aux_batch", cfg.aggregator.reuse_aux_batch},
                       {"aux_target_norm", cfg.aggregator.aux_target_norm}};
    j["schedules"] = {{"gamma0", cfg.schedules.gamma0},
                      {"beta", cfg.schedules.beta},
                      {"alpha0", cfg.schedules.alpha0},
                      {"beta_m", cfg.schedules.beta_m},
                      {"gamma_exponent", cfg.schedules.gamma_exponent},
                      {"alpha_exponent", cfg.schedules.alpha_exponent}};
    j["batch_size"] = cfg.batch_size;
    j["aux_batch_size"] = cfg.aux_batch_size;
    j["iterations"] = cfg.iterations;
    j["eval_every"] = cfg.eval_every;
    j["seed"] = cfg.seed;
    if (cfg.l2_reg) j["l2_reg"] = *cfg.l2_reg;
    j["record_tolerance_stat"] = cfg.record_tolerance_stat;
    j["ball_radius_warn"] = cfg.ball_radius_warn;
    return j;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

} // namespace bygars
