#include "bygars/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "bygars/errors.hpp"
#include "bygars/parallel.hpp"

namespace bygars {

const char* to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::benign: return "benign";
        case AttackKind::sign_flip: return "sign_flip";
        case AttackKind::random_sign_flip: return "random_sign_flip";
        case AttackKind::gaussian: return "gaussian";
        case AttackKind::constant: return "constant";
        case AttackKind::label_flip: return "label_flip";
        case AttackKind::inner_product: return "inner_product";
        case AttackKind::lie: return "lie";
        case AttackKind::ofom: return "ofom";
        case AttackKind::paf: return "paf";
        case AttackKind::scaled_multiplicative: return "scaled_multiplicative";
    }
    return "?";
}

AttackKind attack_kind_from_string(const std::string& name) {
    static const std::pair<const char*, AttackKind> table[] = {
        {"benign", AttackKind::benign},
        {"sign_flip", AttackKind::sign_flip},
        {"random_sign_flip", AttackKind::random_sign_flip},
        {"gaussian", AttackKind::gaussian},
        {"constant", AttackKind::constant},
        {"label_flip", AttackKind::label_flip},
        {"inner_product", AttackKind::inner_product},
        {"lie", AttackKind::lie},
        {"ofom", AttackKind::ofom},
        {"paf", AttackKind::paf},
        {"scaled_multiplicative", AttackKind::scaled_multiplicative},
    };
    for (const auto& [key, kind] : table)
        if (name == key) return kind;
    throw ConfigError("unknown attack kind: " + name);
}

bool is_collusion(AttackKind kind) {
    return kind == AttackKind::inner_product || kind == AttackKind::lie ||
           kind == AttackKind::ofom || kind == AttackKind::paf;
}

void validate(const AttackSpec& spec) {
    switch (spec.kind) {
        case AttackKind::sign_flip:
            if (!(spec.scale < 0.0)) throw ConfigError("sign_flip.scale must be negative");
            break;
        case AttackKind::inner_product:
            if (!(spec.scale < 0.0)) throw ConfigError("inner_product.scale must be negative");
            break;
        case AttackKind::random_sign_flip:
            if (!(spec.stddev >= 0.0)) throw ConfigError("random_sign_flip.std must be nonnegative");
            break;
        case AttackKind::gaussian:
            if (!(spec.noise_std > 0.0)) throw ConfigError("gaussian.noise_std must be positive");
            break;
        case AttackKind::lie:
            if (!(spec.z >= 0.0)) throw ConfigError("lie.z must be nonnegative");
            break;
        case AttackKind::ofom:
        case AttackKind::paf:
            if (!(spec.magnitude > 0.0)) throw ConfigError("ofom/paf.magnitude must be positive");
            break;
        case AttackKind::scaled_multiplicative:
            if (!(spec.kappa_std >= 0.0))
                throw ConfigError("scaled_multiplicative.kappa_std must be nonnegative");
            if (!(spec.kappa_max > 0.0))
                throw ConfigError("scaled_multiplicative.kappa_max must be positive");
            if (std::fabs(spec.kappa_mean) > spec.kappa_max)
                throw ConfigError("scaled_multiplicative.kappa_mean exceeds kappa_max");
            break;
        default:
            break;
    }
}

ParamVector kappa_vector(const std::vector<AttackSpec>& attacks) {
    ParamVector kappa(attacks.size(), 0.0);
    for (std::size_t j = 0; j < attacks.size(); ++j) {
        switch (attacks[j].kind) {
            case AttackKind::benign: kappa[j] = 1.0; break;
            case AttackKind::scaled_multiplicative: kappa[j] = attacks[j].kappa_mean; break;
            default:
                throw ConfigError(std::string("kappa is undefined for attack kind ") +
                                  to_string(attacks[j].kind));
        }
    }
    return kappa;
}

namespace {

std::vector<int> flipped_labels(int k) {
    std::vector<int> map(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) map[static_cast<std::size_t>(l)] = k - 1 - l;
    return map;
}

// Unit vector from d standard normals.
ParamVector random_unit(RngStream& rng, int dim) {
    ParamVector u(static_cast<std::size_t>(dim));
    for (double& x : u) x = rng.normal();
    normalize_inplace(u, 1.0);
    return u;
}

} // namespace

ParamVector honest_gradient(WorkerState& ws, const Objective& obj, const Dataset& ds,
                            std::span<const double> w, int batch_size) {
    auto batch = sample_batch(ws.shard, batch_size, ws.rng);
    if (ws.attack.kind == AttackKind::label_flip) {
        if (ds.kind != TaskKind::classification)
            throw ConfigError("label_flip requires a classification task");
        auto remap = flipped_labels(ds.num_classes);
        return obj.gradient(ds, batch, w, remap);
    }
    return obj.gradient(ds, batch, w);
}

GradientBatch attack_round(std::vector<WorkerState>& workers, const Objective& obj,
                           const Dataset& ds, std::span<const double> w, int batch_size,
                           std::int64_t t) {
    (void)t;
    const int m = static_cast<int>(workers.size());
    if (m < 1) throw ConfigError("attack_round: need at least one worker");
    const int dim = obj.model_dim();

    // Phase 1: every worker computes its honest local gradient; each
    // worker draws only from its own stream, so the result does not
    // depend on scheduling.
    GradientBatch honest(m, dim);
    par::for_each(m, [&](std::int64_t j) {
        auto g = honest_gradient(workers[static_cast<std::size_t>(j)], obj, ds, w, batch_size);
        std::copy(g.begin(), g.end(), honest.row(static_cast<int>(j)).begin());
    });

    // Benign honest gradients visible to colluders.
    std::vector<int> benign_rows;
    for (int j = 0; j < m; ++j)
        if (workers[static_cast<std::size_t>(j)].attack.kind == AttackKind::benign)
            benign_rows.push_back(j);

    ParamVector benign_mean, benign_std;
    bool have_collusion = false;
    for (const auto& ws : workers) have_collusion |= is_collusion(ws.attack.kind);
    if (have_collusion) {
        if (benign_rows.empty())
            throw ConfigError("collusion attacks (lie/inner_product/ofom/paf) are undefined "
                              "with zero benign workers");
        benign_mean.assign(static_cast<std::size_t>(dim), 0.0);
        for (int j : benign_rows) axpy(1.0, honest.row(j), benign_mean);
        scale_inplace(benign_mean, 1.0 / static_cast<double>(benign_rows.size()));
        benign_std.assign(static_cast<std::size_t>(dim), 0.0);
        for (int j : benign_rows) {
            auto row = honest.row(j);
            for (int c = 0; c < dim; ++c) {
                double dev = row[static_cast<std::size_t>(c)] - benign_mean[static_cast<std::size_t>(c)];
                benign_std[static_cast<std::size_t>(c)] += dev * dev;
            }
        }
        for (double& v : benign_std) v = std::sqrt(v / static_cast<double>(benign_rows.size()));
    }

    // Phase 2: per-worker transforms; attack draws come after the batch
    // draw on the same per-worker stream, keeping rounds replayable.
    GradientBatch out(m, dim);
    for (int j = 0; j < m; ++j) {
        WorkerState& ws = workers[static_cast<std::size_t>(j)];
        auto src = honest.row(j);
        auto dst = out.row(j);
        switch (ws.attack.kind) {
            case AttackKind::benign:
            case AttackKind::label_flip:
                std::copy(src.begin(), src.end(), dst.begin());
                break;
            case AttackKind::sign_flip:
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = ws.attack.scale * src[static_cast<std::size_t>(c)];
                break;
            case AttackKind::random_sign_flip: {
                double k = ws.rng.normal(ws.attack.mean, ws.attack.stddev);
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = k * src[static_cast<std::size_t>(c)];
                break;
            }
            case AttackKind::gaussian:
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = ws.rng.normal(0.0, ws.attack.noise_std);
                break;
            case AttackKind::constant:
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = ws.attack.value;
                break;
            case AttackKind::inner_product:
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = ws.attack.scale * benign_mean[static_cast<std::size_t>(c)];
                break;
            case AttackKind::lie:
                for (int c = 0; c < dim; ++c)
                    dst[static_cast<std::size_t>(c)] = benign_mean[static_cast<std::size_t>(c)] - ws.attack.z * benign_std[static_cast<std::size_t>(c)];
                break;
            case AttackKind::ofom: {
                if (ws.ofom_direction.empty()) ws.ofom_direction = random_unit(ws.rng, dim);
                for (int c = 0; c < dim; ++c)
                    dst[static_cast<std::size_t>(c)] = benign_mean[static_cast<std::size_t>(c)] +
                                                       ws.attack.magnitude * ws.ofom_direction[static_cast<std::size_t>(c)];
                break;
            }
            case AttackKind::paf: {
                ParamVector u = random_unit(ws.rng, dim);
                for (int c = 0; c < dim; ++c)
                    dst[static_cast<std::size_t>(c)] = benign_mean[static_cast<std::size_t>(c)] + ws.attack.magnitude * u[static_cast<std::size_t>(c)];
                break;
            }
            case AttackKind::scaled_multiplicative: {
                double k = ws.rng.normal(ws.attack.kappa_mean, ws.attack.kappa_std);
                k = std::clamp(k, -ws.attack.kappa_max, ws.attack.kappa_max);
                for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c)] = k * src[static_cast<std::size_t>(c)];
                break;
            }
        }
        out.worker_ids[static_cast<std::size_t>(j)] = ws.worker_id;
    }
    return out;
}

std::vector<AttackSpec> mixed_attack_default(int m) {
    if (m != 8) throw ConfigError("the mixed attack lineup is defined for 8 workers");
    std::vector<AttackSpec> attacks;
    attacks.push_back(AttackSpec::of(AttackKind::benign));
    attacks.push_back(AttackSpec::of(AttackKind::gaussian));
    attacks.push_back(AttackSpec::of(AttackKind::sign_flip));
    attacks.push_back(AttackSpec::of(AttackKind::sign_flip));
    attacks.push_back(AttackSpec::of(AttackKind::random_sign_flip));
    attacks.push_back(AttackSpec::of(AttackKind::label_flip));
    attacks.push_back(AttackSpec::of(AttackKind::label_flip));
    attacks.push_back(AttackSpec::of(AttackKind::constant));
    return attacks;
}

} // namespace bygars
