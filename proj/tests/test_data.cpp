#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "bygars/core.hpp"
#include "bygars/data.hpp"
#include "bygars/errors.hpp"

using namespace bygars;

namespace {

SyntheticSpec stock_scale_regression() {
    SyntheticSpec spec;
    spec.kind = TaskKind::regression;
    spec.d = 20;
    spec.n_total = 10000;
    spec.n_test = 2000;
    spec.n_aux = 250;
    return spec;
}

} // namespace

TEST_CASE("regression generator leaves 7750 rows for worker shards") {
    auto spec = stock_scale_regression();
    RngStream rng(0, 1);
    auto gen = generate_regression(spec, rng);
    CHECK(gen.dataset.n == 10000);
    CHECK(gen.dataset.d == 20);
    CHECK(static_cast<int>(gen.theta_star.size()) == 20);

    RngStream part_rng(0, 2);
    auto split = partition(gen.dataset, 8, spec.n_aux, spec.n_test, part_rng);
    std::int64_t sharded = 0;
    for (const auto& shard : split.worker_shards) sharded += static_cast<std::int64_t>(shard.size());
    CHECK(sharded == 7750);
}

TEST_CASE("noiseless regression satisfies y = x^T theta* exactly") {
    auto spec = stock_scale_regression();
    spec.n_total = 500;
    spec.n_test = 50;
    spec.n_aux = 20;
    spec.noise_std = 0.0;
    RngStream rng(7, 1);
    auto gen = generate_regression(spec, rng);
    for (std::int64_t i = 0; i < gen.dataset.n; ++i) {
        double y = dot(gen.dataset.row(i), gen.theta_star);
        CHECK(gen.dataset.targets[static_cast<std::size_t>(i)] == y);
    }
}

TEST_CASE("generation is deterministic in the stream") {
    auto spec = stock_scale_regression();
    spec.n_total = 300;
    spec.n_test = 30;
    spec.n_aux = 20;
    RngStream r1(5, 1), r2(5, 1);
    auto a = generate_regression(spec, r1);
    auto b = generate_regression(spec, r2);
    CHECK(a.dataset.features == b.dataset.features);
    CHECK(a.dataset.targets == b.dataset.targets);
    CHECK(a.theta_star == b.theta_star);

    SyntheticSpec cls;
    cls.kind = TaskKind::classification;
    cls.d = 6;
    cls.n_total = 400;
    cls.n_test = 40;
    cls.n_aux = 20;
    cls.num_classes = 3;
    RngStream c1(5, 2), c2(5, 2);
    auto da = generate_classification(cls, c1);
    auto db = generate_classification(cls, c2);
    CHECK(da.features == db.features);
    CHECK(da.labels == db.labels);
}

TEST_CASE("classification covers every class and separates blobs") {
    SyntheticSpec spec;
    spec.kind = TaskKind::classification;
    spec.d = 20;
    spec.n_total = 10000;
    spec.n_test = 2000;
    spec.n_aux = 250;
    spec.num_classes = 10;
    RngStream rng(3, 1);
    auto ds = generate_classification(spec, rng);

    std::vector<int> counts(10, 0);
    for (int l : ds.labels) {
        REQUIRE(l >= 0);
        REQUIRE(l < 10);
        counts[static_cast<std::size_t>(l)]++;
    }
    for (int c : counts) CHECK(c >= 1);

    // Nearest-class-mean accuracy as a separability proxy.
    std::vector<double> means(10 * 20, 0.0);
    for (std::int64_t i = 0; i < ds.n; ++i) {
        auto x = ds.row(i);
        double* mu = means.data() + static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)]) * 20;
        for (int k = 0; k < 20; ++k) mu[k] += x[static_cast<std::size_t>(k)];
    }
    for (int c = 0; c < 10; ++c)
        for (int k = 0; k < 20; ++k) means[static_cast<std::size_t>(c) * 20 + k] /= counts[static_cast<std::size_t>(c)];
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        auto x = ds.row(i);
        int best = -1;
        double best_d = 1e300;
        for (int c = 0; c < 10; ++c) {
            double dist = 0.0;
            for (int k = 0; k < 20; ++k) {
                double dv = x[static_cast<std::size_t>(k)] - means[static_cast<std::size_t>(c) * 20 + k];
                dist += dv * dv;
            }
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        hits += best == ds.labels[static_cast<std::size_t>(i)];
    }
    CHECK(static_cast<double>(hits) / ds.n >= 0.95);
}

TEST_CASE("two-blob two-dimensional task is cleanly separable") {
    SyntheticSpec spec;
    spec.kind = TaskKind::classification;
    spec.d = 2;
    spec.n_total = 2000;
    spec.n_test = 200;
    spec.n_aux = 50;
    spec.num_classes = 2;
    RngStream rng(9, 1);
    auto ds = generate_classification(spec, rng);
    // Separation direction for centered two-blob data is the class-0 mean.
    std::vector<double> mu0(2, 0.0);
    int n0 = 0;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        if (ds.labels[static_cast<std::size_t>(i)] == 0) {
            mu0[0] += ds.row(i)[0];
            mu0[1] += ds.row(i)[1];
            ++n0;
        }
    }
    mu0[0] /= n0;
    mu0[1] /= n0;
    std::int64_t correct = 0;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        double side = ds.row(i)[0] * mu0[0] + ds.row(i)[1] * mu0[1];
        correct += (side > 0.0) == (ds.labels[static_cast<std::size_t>(i)] == 0);
    }
    CHECK(static_cast<double>(correct) / ds.n > 0.98);
}

TEST_CASE("partition shard sizes and disjointness at the stock scale") {
    auto spec = stock_scale_regression();
    RngStream rng(1, 1);
    auto gen = generate_regression(spec, rng);
    RngStream part_rng(1, 2);
    auto split = partition(gen.dataset, 8, 250, 2000, part_rng);

    std::multiset<std::size_t> sizes;
    for (const auto& shard : split.worker_shards) sizes.insert(shard.size());
    CHECK(sizes.count(969) == 6);
    CHECK(sizes.count(968) == 2);

    std::set<std::int32_t> all;
    std::size_t total = 0;
    auto absorb = [&](const std::vector<std::int32_t>& idx) {
        for (auto i : idx) all.insert(i);
        total += idx.size();
    };
    for (const auto& shard : split.worker_shards) absorb(shard);
    absorb(split.auxiliary);
    absorb(split.test);
    CHECK(all.size() == total);          // pairwise disjoint
    CHECK(all.size() == 10000u);         // covers every row
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == 9999);
}

TEST_CASE("single worker takes the remainder") {
    SyntheticSpec spec;
    spec.d = 2;
    spec.n_total = 10;
    spec.n_test = 1;
    spec.n_aux = 1;
    RngStream rng(2, 1);
    auto gen = generate_regression(spec, rng);
    RngStream part_rng(2, 2);
    auto split = partition(gen.dataset, 1, 1, 1, part_rng);
    REQUIRE(split.worker_shards.size() == 1u);
    CHECK(split.worker_shards[0].size() == 8u);
}

TEST_CASE("partition properties on random shapes") {
    RngStream meta(17, 0);
    for (int rep = 0; rep < 20; ++rep) {
        SyntheticSpec spec;
        spec.d = 2;
        spec.n_total = 50 + static_cast<std::int64_t>(meta.below(500));
        spec.n_test = static_cast<int>(meta.below(10));
        spec.n_aux = static_cast<int>(meta.below(10));
        int m = 1 + static_cast<int>(meta.below(7));
        RngStream rng(100 + rep, 1);
        auto gen = generate_regression(spec, rng);
        RngStream part_rng(100 + rep, 2);
        auto split = partition(gen.dataset, m, spec.n_aux, spec.n_test, part_rng);

        std::size_t min_size = SIZE_MAX, max_size = 0, total = 0;
        std::set<std::int32_t> all;
        for (const auto& shard : split.worker_shards) {
            CHECK(!shard.empty());
            min_size = std::min(min_size, shard.size());
            max_size = std::max(max_size, shard.size());
            total += shard.size();
            for (auto i : shard) all.insert(i);
        }
        CHECK(max_size - min_size <= 1u);
        for (auto i : split.auxiliary) all.insert(i);
        for (auto i : split.test) all.insert(i);
        CHECK(all.size() == total + split.auxiliary.size() + split.test.size());
        CHECK(all.size() == static_cast<std::size_t>(spec.n_total));
    }
}

TEST_CASE("sample_batch draws distinct members and replays") {
    std::vector<std::int32_t> indices(969);
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<std::int32_t>(1000 + i);

    RngStream rng(4, 1);
    auto batch = sample_batch(indices, 32, rng);
    CHECK(batch.size() == 32u);
    std::set<std::int32_t> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 32u);
    for (auto i : uniq) {
        CHECK(i >= 1000);
        CHECK(i < 1969);
    }

    RngStream replay(4, 1);
    auto batch2 = sample_batch(indices, 32, replay);
    CHECK(batch == batch2);

    // Exhaustive sample returns the full set.
    std::vector<std::int32_t> small{5, 6, 7, 8};
    RngStream rng2(4, 2);
    auto full = sample_batch(small, 4, rng2);
    std::sort(full.begin(), full.end());
    CHECK(full == small);

    RngStream rng3(4, 3);
    CHECK_THROWS_AS(sample_batch(small, 5, rng3), ConfigError);
}

TEST_CASE("dataset files round-trip bit-exactly") {
    SyntheticSpec spec;
    spec.d = 7;
    spec.n_total = 123;
    spec.n_test = 10;
    spec.n_aux = 5;
    RngStream rng(6, 1);
    auto gen = generate_regression(spec, rng);
    const std::string path = "test_dataset_reg.bin";
    save_dataset(gen.dataset, path);
    auto loaded = load_dataset(path);
    CHECK(loaded.kind == TaskKind::regression);
    CHECK(loaded.n == gen.dataset.n);
    CHECK(loaded.d == gen.dataset.d);
    CHECK(loaded.features == gen.dataset.features);
    CHECK(loaded.targets == gen.dataset.targets);
    std::remove(path.c_str());

    SyntheticSpec cls;
    cls.kind = TaskKind::classification;
    cls.d = 3;
    cls.n_total = 60;
    cls.n_test = 6;
    cls.n_aux = 4;
    cls.num_classes = 4;
    RngStream crng(6, 2);
    auto cds = generate_classification(cls, crng);
    const std::string cpath = "test_dataset_cls.bin";
    save_dataset(cds, cpath);
    auto cloaded = load_dataset(cpath);
    CHECK(cloaded.kind == TaskKind::classification);
    CHECK(cloaded.num_classes == 4);
    CHECK(cloaded.features == cds.features);
    CHECK(cloaded.labels == cds.labels);
    std::remove(cpath.c_str());
}

TEST_CASE("spec validation rejects impossible shapes") {
    SyntheticSpec spec;
    spec.n_total = 100;
    spec.n_test = 80;
    spec.n_aux = 30;
    CHECK_THROWS_AS(validate(spec), ConfigError);
}
