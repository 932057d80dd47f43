#include "medmeta/error.hpp"
#include "medmeta/pooling.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace medmeta;

namespace {

std::vector<EffectEstimate> effects(std::vector<double> y, std::vector<double> v) {
    std::vector<EffectEstimate> out;
    for (std::size_t i = 0; i < y.size(); ++i) {
        EffectEstimate e;
        e.study_id = "s" + std::to_string(i);
        e.effect = y[i];
        e.variance = v[i];
        out.push_back(e);
    }
    return out;
}

} // namespace

TEST_CASE("fixed-effect pooling") {
    const auto r = pool_fixed(effects({1, 3}, {1, 1}));
    CHECK(r.pooled == doctest::Approx(2.0));
    CHECK(r.variance == doctest::Approx(0.5));
    CHECK(r.q_stat == doctest::Approx(2.0));
    CHECK(r.ci_low == doctest::Approx(2.0 - kZ975 * std::sqrt(0.5)));
    CHECK(r.tau2 == 0.0);
    CHECK(r.model == PoolModel::FixedEffect);

    const auto one = pool_fixed(effects({5}, {2}));
    CHECK(one.pooled == 5.0);
    CHECK(one.variance == 2.0);
    CHECK(one.q_stat == 0.0);
    CHECK(one.het_p == 1.0);
    CHECK(one.i2 == 0.0);

    CHECK(pool_fixed(effects({0, 2}, {1, 1})).i2 == doctest::Approx(50.0));
}

TEST_CASE("pooling errors") {
    try {
        pool_fixed({});
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyInput);
    }
    try {
        pool_random(effects({1, 2}, {1, 0}));
        FAIL("expected NonPositiveVariance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveVariance);
    }
}

TEST_CASE("DerSimonian-Laird tau^2") {
    CHECK(dersimonian_laird_tau2(effects({0, 2}, {1, 1})) == doctest::Approx(1.0));
    CHECK(dersimonian_laird_tau2(effects({3, 3, 3}, {1, 2, 3})) == 0.0);
    CHECK(dersimonian_laird_tau2(effects({0, 0.1}, {1, 1})) == 0.0);
    CHECK(dersimonian_laird_tau2(effects({4}, {1})) == 0.0);
}

TEST_CASE("random-effects pooling") {
    const auto r = pool_random(effects({0, 2}, {1, 1}));
    CHECK(r.tau2 == doctest::Approx(1.0));
    CHECK(r.weights[0] == doctest::Approx(0.5));
    CHECK(r.weights[1] == doctest::Approx(0.5));
    CHECK(r.pooled == doctest::Approx(1.0));
    CHECK(r.variance == doctest::Approx(1.0));
    CHECK(r.q_stat == doctest::Approx(2.0));
    CHECK(r.model == PoolModel::RandomEffects);

    const auto homo = effects({1, 1.1, 0.9}, {1, 2, 3});
    const auto a = pool_random(homo);
    const auto b = pool_fixed(homo);
    CHECK(a.tau2 == 0.0);
    CHECK(a.pooled == b.pooled);
    CHECK(a.variance == b.variance);
    CHECK(a.ci_low == b.ci_low);
}

TEST_CASE("property: equal variances and no heterogeneity give the unweighted mean") {
    const auto e = effects({1, 1.2, 0.8, 1.05}, {4, 4, 4, 4});
    const auto r = pool_random(e);
    CHECK(r.tau2 == 0.0);
    CHECK(r.pooled == doctest::Approx((1 + 1.2 + 0.8 + 1.05) / 4));
}

TEST_CASE("property: variance rescaling") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> y(0, 2);
    std::uniform_real_distribution<double> v(0.1, 3);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> ys, vs;
        for (int i = 0; i < 6; ++i) {
            ys.push_back(y(rng));
            vs.push_back(v(rng));
        }
        const double lambda = v(rng);
        std::vector<double> scaled = vs;
        for (auto& x : scaled) x *= lambda;
        const auto a = pool_fixed(effects(ys, vs));
        const auto b = pool_fixed(effects(ys, scaled));
        CHECK(b.pooled == doctest::Approx(a.pooled).epsilon(1e-12));
        CHECK(b.q_stat == doctest::Approx(a.q_stat / lambda).epsilon(1e-10));
        CHECK(a.i2 >= 0.0);
        CHECK(a.i2 <= 100.0);
        CHECK(a.ci_low < a.ci_high);
        const auto r = pool_random(effects(ys, vs));
        CHECK(r.tau2 >= 0.0);
        CHECK(r.ci_low <= r.pooled);
        CHECK(r.pooled <= r.ci_high);
    }
}
