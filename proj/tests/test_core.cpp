#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "bygars/core.hpp"
#include "bygars/errors.hpp"
#include "bygars/rng.hpp"

using namespace bygars;

TEST_CASE("gamma schedule matches direct evaluation") {
    ScheduleSpec s;
    s.gamma0 = 0.2;
    s.beta = 0.9;
    CHECK(gamma_at(s, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(gamma_at(s, 10) == doctest::Approx(0.02).epsilon(1e-15));

    s.gamma0 = 0.05;
    s.beta = 0.5;
    CHECK(gamma_at(s, 2) == doctest::Approx(0.025).epsilon(1e-15));
}

TEST_CASE("alpha schedule matches direct evaluation") {
    ScheduleSpec s;
    s.alpha0 = 0.2;
    s.beta_m = 0.5;
    CHECK(alpha_at(s, 0) == doctest::Approx(0.2).epsilon(1e-15));

    s.alpha0 = 0.001;
    s.beta_m = 0.1;
    CHECK(alpha_at(s, 1) == doctest::Approx(0.001 / 1.1).epsilon(1e-15));

    s.alpha0 = 0.05;
    s.beta_m = 0.5;
    double expected = 0.05 / (1.0 + 0.5 * std::pow(1024.0, 0.9));
    CHECK(alpha_at(s, 1024) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("schedules are non-increasing in t") {
    RngStream rng(11, 0);
    for (int rep = 0; rep < 50; ++rep) {
        ScheduleSpec s;
        s.gamma0 = 0.01 + rng.uniform();
        s.beta = rng.uniform();
        s.alpha0 = 0.01 + rng.uniform();
        s.beta_m = rng.uniform();
        s.gamma_exponent = 0.5 + rng.uniform();
        s.alpha_exponent = 0.5 + rng.uniform();
        double prev_g = gamma_at(s, 0);
        double prev_a = alpha_at(s, 0);
        for (std::int64_t t = 1; t < 2000; t += 13) {
            double g = gamma_at(s, t);
            double a = alpha_at(s, t);
            CHECK(g > 0.0);
            CHECK(a > 0.0);
            CHECK(g <= prev_g);
            CHECK(a <= prev_a);
            prev_g = g;
            prev_a = a;
        }
    }
}

TEST_CASE("normalize on known vectors") {
    ParamVector v{3.0, 4.0};
    auto u = normalize(v, 1.0);
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));

    ParamVector zero{0.0, 0.0};
    auto z = normalize(zero, 5.0);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);

    ParamVector unit{1.0, 0.0};
    auto scaled = normalize(unit, 2.0);
    CHECK(scaled[0] == 2.0);
    CHECK(scaled[1] == 0.0);
}

TEST_CASE("normalize rejects non-finite input") {
    ParamVector bad{1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(normalize(bad, 1.0), SimError);
    ParamVector nan_vec{std::nan(""), 0.0};
    CHECK_THROWS_AS(normalize(nan_vec, 1.0), SimError);
}

TEST_CASE("normalized vectors hit the target norm to a few ulps") {
    RngStream rng(3, 9);
    for (int rep = 0; rep < 500; ++rep) {
        int dim = 1 + static_cast<int>(rng.below(100));
        ParamVector v(static_cast<std::size_t>(dim));
        double scale = std::pow(10.0, rng.normal(0.0, 3.0));
        for (double& x : v) x = scale * rng.normal();
        double target = 0.1 + 5.0 * rng.uniform();
        auto u = normalize(v, target);
        if (norm2(v) <= kNormEpsilon) continue;
        double ulp = std::nextafter(target, std::numeric_limits<double>::infinity()) - target;
        CHECK(std::fabs(norm2(u) - target) <= 4.0 * ulp);
    }
}

TEST_CASE("batch row helpers") {
    GradientBatch h(2, 3);
    double vals[2][3] = {{1.0, 2.0, 3.0}, {-1.0, 0.5, 2.0}};
    for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 3; ++c) h.row(j)[static_cast<std::size_t>(c)] = vals[j][c];

    ParamVector q{2.0, -1.0};
    auto agg = weighted_row_sum(h, q);
    CHECK(agg[0] == doctest::Approx(3.0));
    CHECK(agg[1] == doctest::Approx(3.5));
    CHECK(agg[2] == doctest::Approx(4.0));

    ParamVector g{1.0, 1.0, 1.0};
    auto ips = row_dots(h, g);
    CHECK(ips[0] == doctest::Approx(6.0));
    CHECK(ips[1] == doctest::Approx(1.5));
}

TEST_CASE("rng streams replay and separate") {
    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 8);
    RngStream d(43, 7);
    int same_c = 0, same_d = 0;
    RngStream ref(42, 7);
    for (int i = 0; i < 64; ++i) {
        std::uint64_t r = ref.next_u64();
        same_c += c.next_u64() == r;
        same_d += d.next_u64() == r;
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("rng uniform and integer draws stay in range") {
    RngStream rng(5, 5);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 3000; ++i) {
        std::uint64_t v = rng.below(13);
        CHECK(v < 13);
        seen.insert(v);
    }
    CHECK(seen.size() == 13);
}

TEST_CASE("rng normal has plausible first moments") {
    RngStream rng(19, 2);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sum_sq += x * x;
    }
    double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);      // ~4.5 sigma at n=2e5
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("substreams are reproducible and distinct") {
    RngStream base(123, 456);
    auto s1 = base.substream(1);
    auto s2 = base.substream(1);
    auto s3 = base.substream(2);
    CHECK(s1.next_u64() == s2.next_u64());
    CHECK(s1.next_u64() != s3.next_u64());
}
