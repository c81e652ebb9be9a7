#pragma once

// Worker behaviors: benign gradient computation and the attack suite.
//
// Local attacks transform only the attacker's own honest gradient
// (sign_flip, random_sign_flip, scaled_multiplicative), replace it with
// an arbitrary vector (gaussian, constant), or poison the local data
// (label_flip). Collusion attacks (inner_product, lie, ofom, paf) read
// the benign workers' honest gradients and craft their row from those.
// scaled_multiplicative is the bounded multiplicative-noise adversary
// used by the theorem checks.

#include <cstdint>
#include <string>
#include <vector>

#include "bygars/core.hpp"
#include "bygars/data.hpp"
#include "bygars/objective.hpp"
#include "bygars/rng.hpp"

namespace bygars {

enum class AttackKind {
    benign,
    sign_flip,
    random_sign_flip,
    gaussian,
    constant,
    label_flip,
    inner_product,
    lie,
    ofom,
    paf,
    scaled_multiplicative,
};

const char* to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& name);
bool is_collusion(AttackKind kind);

struct AttackSpec {
    AttackKind kind = AttackKind::benign;

    double scale = -1.0;       // sign_flip, inner_product: negative multiplier
    double mean = -2.0;        // random_sign_flip: multiplier mean
    double stddev = 1.0;       // random_sign_flip: multiplier std
    double noise_std = 14.142135623730951; // gaussian: per-coordinate std (variance 200)
    double value = 100.0;      // constant: the broadcast scalar
    double z = 1.5;            // lie: sigma multiplier
    double magnitude = 100.0;  // ofom / paf: length of the added vector
    double kappa_mean = 1.0;   // scaled_multiplicative
    double kappa_std = 0.0;    // scaled_multiplicative
    double kappa_max = 10.0;   // scaled_multiplicative: |kappa~| clip bound

    static AttackSpec of(AttackKind kind) {
        AttackSpec s;
        s.kind = kind;
        return s;
    }
};

void validate(const AttackSpec& spec);

// Mean multiplicative-noise vector for a worker set; defined only when
// every attack is benign (1) or scaled_multiplicative (kappa_mean).
ParamVector kappa_vector(const std::vector<AttackSpec>& attacks);

struct WorkerState {
    int worker_id = 0;
    std::vector<std::int32_t> shard;
    AttackSpec attack;
    RngStream rng;
    ParamVector ofom_direction; // fixed unit direction, drawn lazily once per run

    WorkerState(int id, std::vector<std::int32_t> shard_, AttackSpec attack_, RngStream rng_)
        : worker_id(id), shard(std::move(shard_)), attack(attack_), rng(std::move(rng_)) {}
};

// Mini-batch gradient on the worker's own shard; label_flip workers
// evaluate it under l -> K-1-l.
ParamVector honest_gradient(WorkerState& ws, const Objective& obj, const Dataset& ds,
                            std::span<const double> w, int batch_size);

// One synchronous round: phase 1 computes every worker's honest local
// gradient (parallel, per-worker streams); phase 2 lets colluding kinds
// read the benign honest gradients and replace their own row.
GradientBatch attack_round(std::vector<WorkerState>& workers, const Objective& obj,
                           const Dataset& ds, std::span<const double> w, int batch_size,
                           std::int64_t t);

// The stock 8-worker mixed-attack lineup: worker 0 benign, then one
// gaussian, two sign flips, one random sign flip, two label flips, and
// one constant attacker.
std::vector<AttackSpec> mixed_attack_default(int m = 8);

} // namespace bygars
