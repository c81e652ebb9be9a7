#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "bygars/adversary.hpp"
#include "bygars/errors.hpp"
#include "bygars/rng.hpp"

using namespace bygars;

namespace {

struct Fixture {
    Dataset dataset;
    Objective objective;
    ParamVector w;
    std::vector<std::vector<std::int32_t>> shards;

    explicit Fixture(TaskKind kind, int m = 8, std::uint64_t seed = 11) {
        SyntheticSpec spec;
        spec.kind = kind;
        spec.d = 6;
        spec.n_total = 800;
        spec.n_test = 40;
        spec.n_aux = 40;
        spec.num_classes = 4;
        RngStream rng(seed, 1);
        if (kind == TaskKind::regression) {
            dataset = generate_regression(spec, rng).dataset;
        } else {
            dataset = generate_classification(spec, rng);
        }
        objective = Objective::for_dataset(dataset, 0.0);
        RngStream part(seed, 2);
        auto split = partition(dataset, m, spec.n_aux, spec.n_test, part);
        shards = split.worker_shards;
        RngStream wrng(seed, 3);
        w.resize(static_cast<std::size_t>(objective.model_dim()));
        for (double& v : w) v = 0.3 * wrng.normal();
    }

    std::vector<WorkerState> workers(const std::vector<AttackSpec>& attacks,
                                     std::uint64_t salt = 0) const {
        std::vector<WorkerState> out;
        for (std::size_t j = 0; j < attacks.size(); ++j)
            out.emplace_back(static_cast<int>(j), shards[j % shards.size()], attacks[j],
                             RngStream(99, mix64(salt, j)));
        return out;
    }
};

std::vector<AttackSpec> benign_except(int m, int idx, AttackSpec spec) {
    std::vector<AttackSpec> attacks(static_cast<std::size_t>(m),
                                    AttackSpec::of(AttackKind::benign));
    attacks[static_cast<std::size_t>(idx)] = spec;
    return attacks;
}

} // namespace

TEST_CASE("all-benign round reproduces the honest gradients") {
    Fixture fx(TaskKind::regression);
    auto attacks = std::vector<AttackSpec>(8, AttackSpec::of(AttackKind::benign));
    auto round_workers = fx.workers(attacks);
    auto check_workers = fx.workers(attacks); // same streams, replayed
    auto h = attack_round(round_workers, fx.objective, fx.dataset, fx.w, 16, 0);
    for (int j = 0; j < 8; ++j) {
        auto honest = honest_gradient(check_workers[static_cast<std::size_t>(j)], fx.objective,
                                      fx.dataset, fx.w, 16);
        auto row = h.row(j);
        for (std::size_t c = 0; c < honest.size(); ++c) CHECK(row[c] == honest[c]);
    }
}

TEST_CASE("sign flip sends the exact negation") {
    Fixture fx(TaskKind::regression);
    auto attacks = benign_except(8, 3, AttackSpec::of(AttackKind::sign_flip));
    auto round_workers = fx.workers(attacks);
    auto check_workers = fx.workers(attacks);
    auto h = attack_round(round_workers, fx.objective, fx.dataset, fx.w, 16, 0);
    auto honest = honest_gradient(check_workers[3], fx.objective, fx.dataset, fx.w, 16);
    auto row = h.row(3);
    double ip = 0.0, hn = 0.0;
    for (std::size_t c = 0; c < honest.size(); ++c) {
        CHECK(row[c] == -honest[c]);
        ip += row[c] * honest[c];
        hn += honest[c] * honest[c];
    }
    CHECK(ip == doctest::Approx(-hn).epsilon(1e-15));
}

TEST_CASE("label flip equals the gradient under remapped labels") {
    Fixture fx(TaskKind::classification);
    auto attacks = benign_except(8, 2, AttackSpec::of(AttackKind::label_flip));
    auto round_workers = fx.workers(attacks);
    auto h = attack_round(round_workers, fx.objective, fx.dataset, fx.w, 16, 0);

    // Recompute with an explicitly flipped label map on the same batch.
    auto replay = fx.workers(attacks);
    auto batch = sample_batch(replay[2].shard, 16, replay[2].rng);
    const int k = fx.dataset.num_classes;
    std::vector<int> remap(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) remap[static_cast<std::size_t>(l)] = k - 1 - l;
    auto expect = fx.objective.gradient(fx.dataset, batch, fx.w, remap);
    auto row = h.row(2);
    for (std::size_t c = 0; c < expect.size(); ++c) CHECK(row[c] == expect[c]);
}

TEST_CASE("label flip refuses regression tasks") {
    Fixture fx(TaskKind::regression);
    auto attacks = benign_except(8, 0, AttackSpec::of(AttackKind::label_flip));
    auto ws = fx.workers(attacks);
    CHECK_THROWS_AS(attack_round(ws, fx.objective, fx.dataset, fx.w, 16, 0), ConfigError);
}

TEST_CASE("lie rows are the benign mean minus z sigma per coordinate") {
    Fixture fx(TaskKind::regression);
    std::vector<AttackSpec> attacks(8, AttackSpec::of(AttackKind::benign));
    AttackSpec lie = AttackSpec::of(AttackKind::lie);
    lie.z = 1.5;
    attacks[5] = attacks[6] = attacks[7] = lie;
    auto round_workers = fx.workers(attacks);
    auto h = attack_round(round_workers, fx.objective, fx.dataset, fx.w, 16, 0);

    // Offline recomputation of mean and (population) sigma over the five
    // benign rows.
    const int dim = fx.objective.model_dim();
    std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
    for (int j = 0; j < 5; ++j)
        for (int c = 0; c < dim; ++c) mu[static_cast<std::size_t>(c)] += h.row(j)[static_cast<std::size_t>(c)] / 5.0;
    std::vector<double> sigma(static_cast<std::size_t>(dim), 0.0);
    for (int j = 0; j < 5; ++j)
        for (int c = 0; c < dim; ++c) {
            double dev = h.row(j)[static_cast<std::size_t>(c)] - mu[static_cast<std::size_t>(c)];
            sigma[static_cast<std::size_t>(c)] += dev * dev / 5.0;
        }
    for (double& s : sigma) s = std::sqrt(s);

    for (int j = 5; j < 8; ++j)
        for (int c = 0; c < dim; ++c)
            CHECK(h.row(j)[static_cast<std::size_t>(c)] ==
                  doctest::Approx(mu[static_cast<std::size_t>(c)] - 1.5 * sigma[static_cast<std::size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("collusion attacks require a benign worker") {
    Fixture fx(TaskKind::regression);
    for (auto kind : {AttackKind::lie, AttackKind::inner_product, AttackKind::ofom, AttackKind::paf}) {
        std::vector<AttackSpec> attacks(4, AttackSpec::of(AttackKind::sign_flip));
        attacks[0] = AttackSpec::of(kind);
        auto ws = fx.workers(attacks);
        CHECK_THROWS_AS(attack_round(ws, fx.objective, fx.dataset, fx.w, 8, 0), ConfigError);
    }
}

TEST_CASE("colluders read only benign rows") {
    Fixture fx(TaskKind::regression);
    std::vector<AttackSpec> attacks(6, AttackSpec::of(AttackKind::benign));
    attacks[3] = AttackSpec::of(AttackKind::lie);
    attacks[4] = AttackSpec::of(AttackKind::inner_product);
    AttackSpec noisy = AttackSpec::of(AttackKind::gaussian);
    attacks[5] = noisy;

    auto a = fx.workers(attacks, 1);
    auto h1 = attack_round(a, fx.objective, fx.dataset, fx.w, 16, 0);

    // Corrupt the gaussian worker's behavior (different stream, huge
    // noise); the colluders' rows must not move.
    attacks[5].noise_std = 4000.0;
    auto b = fx.workers(attacks, 1);
    b[5].rng = RngStream(4242, 4242);
    auto h2 = attack_round(b, fx.objective, fx.dataset, fx.w, 16, 0);

    for (int j : {3, 4})
        for (int c = 0; c < fx.objective.model_dim(); ++c)
            CHECK(h1.row(j)[static_cast<std::size_t>(c)] == h2.row(j)[static_cast<std::size_t>(c)]);
}

TEST_CASE("gaussian rows do not depend on the parameters") {
    Fixture fx(TaskKind::regression);
    auto attacks = benign_except(3, 1, AttackSpec::of(AttackKind::gaussian));
    auto a = fx.workers(attacks, 2);
    auto b = fx.workers(attacks, 2);
    ParamVector w2 = fx.w;
    for (double& v : w2) v += 1.5;
    auto h1 = attack_round(a, fx.objective, fx.dataset, fx.w, 16, 0);
    auto h2 = attack_round(b, fx.objective, fx.dataset, w2, 16, 0);
    for (int c = 0; c < fx.objective.model_dim(); ++c)
        CHECK(h1.row(1)[static_cast<std::size_t>(c)] == h2.row(1)[static_cast<std::size_t>(c)]);
}

TEST_CASE("constant rows broadcast the configured scalar") {
    Fixture fx(TaskKind::regression);
    AttackSpec constant = AttackSpec::of(AttackKind::constant);
    constant.value = 100.0;
    auto attacks = benign_except(4, 2, constant);
    auto ws = fx.workers(attacks);
    auto h = attack_round(ws, fx.objective, fx.dataset, fx.w, 16, 0);
    for (int c = 0; c < fx.objective.model_dim(); ++c)
        CHECK(h.row(2)[static_cast<std::size_t>(c)] == 100.0);
}

TEST_CASE("inner product rows negate the benign mean") {
    Fixture fx(TaskKind::regression);
    auto attacks = benign_except(5, 4, AttackSpec::of(AttackKind::inner_product));
    auto ws = fx.workers(attacks);
    auto h = attack_round(ws, fx.objective, fx.dataset, fx.w, 16, 0);
    const int dim = fx.objective.model_dim();
    for (int c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (int j = 0; j < 4; ++j) mean += h.row(j)[static_cast<std::size_t>(c)] / 4.0;
        CHECK(h.row(4)[static_cast<std::size_t>(c)] == doctest::Approx(-mean).epsilon(1e-12));
    }
}

TEST_CASE("ofom keeps one direction while paf redraws") {
    Fixture fx(TaskKind::regression);
    std::vector<AttackSpec> attacks(4, AttackSpec::of(AttackKind::benign));
    attacks[2] = AttackSpec::of(AttackKind::ofom);
    attacks[3] = AttackSpec::of(AttackKind::paf);
    auto ws = fx.workers(attacks);

    const int dim = fx.objective.model_dim();
    auto extract_direction = [&](const GradientBatch& h, int row) {
        // Subtract the benign mean to recover magnitude * u.
        ParamVector u(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (int j = 0; j < 2; ++j) mean += h.row(j)[static_cast<std::size_t>(c)] / 2.0;
            u[static_cast<std::size_t>(c)] = h.row(row)[static_cast<std::size_t>(c)] - mean;
        }
        normalize_inplace(u, 1.0);
        return u;
    };

    auto h1 = attack_round(ws, fx.objective, fx.dataset, fx.w, 16, 0);
    auto h2 = attack_round(ws, fx.objective, fx.dataset, fx.w, 16, 1);
    auto ofom1 = extract_direction(h1, 2), ofom2 = extract_direction(h2, 2);
    auto paf1 = extract_direction(h1, 3), paf2 = extract_direction(h2, 3);

    double ofom_ip = dot(ofom1, ofom2);
    double paf_ip = dot(paf1, paf2);
    CHECK(ofom_ip == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::fabs(paf_ip) < 0.999); // fresh draw, almost surely a new direction
}

TEST_CASE("scaled multiplicative with zero spread is an exact scaling") {
    Fixture fx(TaskKind::regression);
    AttackSpec scaled = AttackSpec::of(AttackKind::scaled_multiplicative);
    scaled.kappa_mean = -2.5;
    scaled.kappa_std = 0.0;
    auto attacks = benign_except(3, 1, scaled);
    auto round_workers = fx.workers(attacks);
    auto check_workers = fx.workers(attacks);
    auto h = attack_round(round_workers, fx.objective, fx.dataset, fx.w, 16, 0);
    auto honest = honest_gradient(check_workers[1], fx.objective, fx.dataset, fx.w, 16);
    for (std::size_t c = 0; c < honest.size(); ++c)
        CHECK(h.row(1)[c] == -2.5 * honest[c]);
}

TEST_CASE("scaled multiplicative draws average to kappa and respect the clip") {
    AttackSpec scaled = AttackSpec::of(AttackKind::scaled_multiplicative);
    scaled.kappa_mean = -1.0;
    scaled.kappa_std = 0.7;
    scaled.kappa_max = 10.0;
    RngStream rng(77, 1);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double k = rng.normal(scaled.kappa_mean, scaled.kappa_std);
        k = std::clamp(k, -scaled.kappa_max, scaled.kappa_max);
        CHECK(std::fabs(k) <= 10.0);
        sum += k;
    }
    double se = scaled.kappa_std / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum / n - scaled.kappa_mean) <= 3.0 * se);
}

TEST_CASE("kappa vector reads benign and scaled workers only") {
    std::vector<AttackSpec> attacks;
    attacks.push_back(AttackSpec::of(AttackKind::benign));
    AttackSpec scaled = AttackSpec::of(AttackKind::scaled_multiplicative);
    scaled.kappa_mean = -3.0;
    attacks.push_back(scaled);
    auto kappa = kappa_vector(attacks);
    CHECK(kappa[0] == 1.0);
    CHECK(kappa[1] == -3.0);

    attacks.push_back(AttackSpec::of(AttackKind::gaussian));
    CHECK_THROWS_AS(kappa_vector(attacks), ConfigError);
}

TEST_CASE("mixed attack lineup matches the stock counts") {
    auto attacks = mixed_attack_default(8);
    REQUIRE(attacks.size() == 8u);
    CHECK(attacks[0].kind == AttackKind::benign);
    int benign = 0, gaussian = 0, sign = 0, random_sign = 0, label = 0, constant = 0;
    for (const auto& a : attacks) {
        benign += a.kind == AttackKind::benign;
        gaussian += a.kind == AttackKind::gaussian;
        sign += a.kind == AttackKind::sign_flip;
        random_sign += a.kind == AttackKind::random_sign_flip;
        label += a.kind == AttackKind::label_flip;
        constant += a.kind == AttackKind::constant;
    }
    CHECK(benign == 1);
    CHECK(gaussian == 1);
    CHECK(sign == 2);
    CHECK(random_sign == 1);
    CHECK(label == 2);
    CHECK(constant == 1);
    CHECK_THROWS_AS(mixed_attack_default(7), ConfigError);
}

TEST_CASE("attack validation rejects bad parameters") {
    AttackSpec s = AttackSpec::of(AttackKind::sign_flip);
    s.scale = 1.0;
    CHECK_THROWS_AS(validate(s), ConfigError);

    AttackSpec sm = AttackSpec::of(AttackKind::scaled_multiplicative);
    sm.kappa_mean = 50.0;
    sm.kappa_max = 10.0;
    CHECK_THROWS_AS(validate(sm), ConfigError);
}
