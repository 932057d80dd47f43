#include "medmeta/distributions.hpp"
#include "medmeta/error.hpp"
#include "medmeta/median_methods.hpp"
#include "medmeta/pooling.hpp"
#include "medmeta/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace medmeta;

namespace {

GroupSummary s2(int n, double q1, double y, double q3) {
    GroupSummary g;
    g.n = n;
    g.q1 = q1;
    g.median = y;
    g.q3 = q3;
    return g;
}

GroupSummary mean_sd(int n, double m, double s) {
    GroupSummary g;
    g.n = n;
    g.mean = m;
    g.sd = s;
    return g;
}

// Summary from exact theoretical quantiles, using the QE probabilities
// 1/n and 1 - 1/n for the extremes.
GroupSummary exact_summary(Family f, Params p, Scenario s, int n) {
    GroupSummary g;
    g.n = n;
    g.median = quantile(f, p, 0.5);
    if (s != Scenario::S2) {
        g.min = quantile(f, p, 1.0 / n);
        g.max = quantile(f, p, 1.0 - 1.0 / n);
    }
    if (s != Scenario::S1) {
        g.q1 = quantile(f, p, 0.25);
        g.q3 = quantile(f, p, 0.75);
    }
    return g;
}

// Exhaustive binomial oracle: 1 - 2 P(Bin(k, 1/2) <= r - 1) from integer counts.
double exact_coverage(int k, int r) {
    long double total = 0;
    long double c = 1;  // C(k, 0)
    for (int j = 0; j <= r - 1; ++j) {
        total += c;
        c = c * (k - j) / (j + 1);
    }
    return static_cast<double>(1.0L - 2.0L * total / std::pow(2.0L, k));
}

const std::vector<double> kTb = {1.00, 1.00, 6.00, 0.04, 4.00, 0.585, 0.20, -3.00, 1.00};

} // namespace

TEST_CASE("MDM on the TB differences") {
    const auto r = mdm(kTb);
    CHECK(r.pooled == doctest::Approx(1.0));
    CHECK(r.ci_low == doctest::Approx(0.04));
    CHECK(r.ci_high == doctest::Approx(4.00));
    CHECK(r.lower_rank == 2);
    CHECK(r.upper_rank == 8);
    CHECK(r.attained_coverage == doctest::Approx(0.9609).epsilon(1e-4));
    CHECK(r.nominal);
}

TEST_CASE("MDM small k falls back to the range") {
    const std::vector<double> one = {5.0};
    const auto r = mdm(one);
    CHECK(r.pooled == 5.0);
    CHECK(r.ci_low == 5.0);
    CHECK(r.ci_high == 5.0);
    CHECK_FALSE(r.nominal);
    const std::vector<double> five = {3, 1, 2, 5, 4};
    const auto f = mdm(five);
    CHECK_FALSE(f.nominal);
    CHECK(f.ci_low == 1.0);
    CHECK(f.ci_high == 5.0);
    CHECK(f.attained_coverage == doctest::Approx(1 - 2.0 / 32));
    CHECK(mdm(std::vector<double>{4, 1, 3, 2}).pooled == 2.5);
    CHECK_THROWS_AS(mdm(std::vector<double>{}), Error);
}

TEST_CASE("MDM-N interval probabilities") {
    const auto r = mdm_normal_approx(kTb);
    const double half = kZ975 / 6.0;
    auto sorted = kTb;
    std::sort(sorted.begin(), sorted.end());
    CHECK(0.5 - half == doctest::Approx(0.1733).epsilon(1e-4));
    CHECK(r.ci_low == doctest::Approx(sorted_quantile(sorted, 0.5 - half)));
    CHECK(r.ci_high == doctest::Approx(sorted_quantile(sorted, 0.5 + half)));
    const auto two = mdm_normal_approx(std::vector<double>{-1, 3});
    CHECK(two.ci_low == -1);
    CHECK(two.ci_high == 3);
}

TEST_CASE("property: exact MDM coverage for k in 6..100") {
    for (int k = 6; k <= 100; ++k) {
        std::vector<double> y(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) y[static_cast<std::size_t>(i)] = i;
        const auto r = mdm(y);
        const int rank = static_cast<int>(r.lower_rank);
        CHECK(r.nominal);
        CHECK(r.attained_coverage >= 0.95);
        CHECK(r.attained_coverage == doctest::Approx(exact_coverage(k, rank)).epsilon(1e-12));
        // r is the largest admissible rank
        CHECK(exact_coverage(k, rank + 1) < 0.95);
    }
    const std::vector<double> ten = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(std::abs(mdm(ten).attained_coverage - 0.9785) < 1e-4);
}

TEST_CASE("property: MDM is permutation invariant and location equivariant") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0, 3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> y(static_cast<std::size_t>(6 + rep % 20));
        for (auto& v : y) v = z(rng);
        const auto base = mdm(y);
        auto perm = y;
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto p = mdm(perm);
        CHECK(p.pooled == base.pooled);
        CHECK(p.ci_low == base.ci_low);
        CHECK(p.ci_high == base.ci_high);
        for (auto& v : perm) v += 2.5;
        const auto s = mdm(perm);
        CHECK(s.pooled == doctest::Approx(base.pooled + 2.5));
        CHECK(s.ci_low == doctest::Approx(base.ci_low + 2.5));
        CHECK(std::find(y.begin(), y.end(), base.ci_low) != y.end());
        CHECK(std::find(y.begin(), y.end(), base.ci_high) != y.end());
        CHECK(base.ci_low <= base.pooled);
        CHECK(base.pooled <= base.ci_high);
    }
}

TEST_CASE("sp_objective") {
    const auto g = s2(50, 35 - 7 * 0.6744897501960817, 35, 35 + 7 * 0.6744897501960817);
    CHECK(sp_objective(g, Family::Normal, {35, 7}) == doctest::Approx(0.0));
    CHECK(sp_objective(g, Family::Normal, {35, 8}) ==
          doctest::Approx(2 * 0.6744897501960817 * 0.6744897501960817).epsilon(1e-9));
    GroupSummary s1;
    s1.n = 100;
    s1.min = normal_quantile(0.01);
    s1.median = 0;
    s1.max = normal_quantile(0.99);
    CHECK(sp_objective(s1, Family::Normal, {0, 1}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(sp_objective(g, Family::Normal, {35, -1}), Error);
}

TEST_CASE("qe_fit recovers exact normal and log-normal summaries") {
    const auto n = qe_fit(exact_summary(Family::Normal, {35, 7}, Scenario::S2, 50));
    CHECK(n.family == Family::Normal);
    CHECK(n.params.theta1 == doctest::Approx(35).epsilon(1e-3 / 35));
    CHECK(n.params.theta2 == doctest::Approx(7).epsilon(1e-3 / 7));
    CHECK(n.density_at_median == doctest::Approx(0.05699).epsilon(1e-4));

    const auto ln = qe_fit(s2(200, std::exp(-0.6744897501960817), 1.0, std::exp(0.6744897501960817)));
    CHECK(ln.family == Family::LogNormal);
    CHECK(ln.density_at_median == doctest::Approx(1 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-5));
}

TEST_CASE("qe_fit on the Boehme Xpert arm") {
    const auto g = s2(1429, 0.5, 1.5, 3.5);
    const auto fits = qe_fit_candidates(g);
    const auto best = qe_fit(g);
    CHECK(std::isfinite(best.density_at_median));
    CHECK(best.density_at_median > 0.0);
    CHECK(best.density_at_median == doctest::Approx(pdf(best.family, best.params, best.median)));
    for (const auto& f : fits) {
        if (f.usable) CHECK(best.objective <= f.fit->objective + 1e-10);
    }
}

TEST_CASE("qe_fit skips positive families on nonpositive data") {
    const auto fits = qe_fit_candidates(s2(40, -1, 0.5, 2));
    REQUIRE(fits.size() == 4);
    CHECK(fits[0].usable);
    for (std::size_t i = 1; i < 4; ++i) CHECK(fits[i].skipped == ErrorCode::NonPositiveSupport);
    QEConfig only_gamma;
    only_gamma.candidate_families = {Family::Gamma};
    try {
        qe_fit(s2(40, -1, 0.5, 2), only_gamma);
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoConvergence);
    }
}

TEST_CASE("property: qe_fit recovers each family and scenario") {
    const std::pair<Family, Params> truth[] = {{Family::Normal, {35, 7}},
                                               {Family::LogNormal, {1.2, 0.6}},
                                               {Family::Gamma, {3, 0.5}},
                                               {Family::Weibull, {8, 1.5}}};
    for (const auto& [family, params] : truth) {
        for (Scenario s : {Scenario::S1, Scenario::S2, Scenario::S3}) {
            CAPTURE(to_string(family));
            CAPTURE(to_string(s));
            const auto fit = qe_fit(exact_summary(family, params, s, 100));
            CHECK(fit.family == family);
            CHECK(fit.objective < 1e-8);
            CHECK(fit.params.theta1 == doctest::Approx(params.theta1).epsilon(1e-3));
            CHECK(fit.params.theta2 == doctest::Approx(params.theta2).epsilon(1e-3));
        }
    }
}

TEST_CASE("property: candidate order does not change the fit") {
    QEConfig a;
    QEConfig b;
    b.candidate_families = {Family::Weibull, Family::Gamma, Family::LogNormal, Family::Normal};
    const auto g = s2(90, 2.6, 3.8, 5.7);
    const auto fa = qe_fit(g, a);
    const auto fb = qe_fit(g, b);
    CHECK(fa.family == fb.family);
    CHECK(fa.objective == fb.objective);
    CHECK(fa.params.theta1 == fb.params.theta1);
}

TEST_CASE("var_diff_medians") {
    const double f = 1 / (7 * std::sqrt(2 * std::numbers::pi));
    CHECK(var_diff_medians(f, f, 50, 50) == doctest::Approx(std::numbers::pi * 49 / 50));
    CHECK(var_diff_medians(0.1, 0.2, 1e15, 40) == doctest::Approx(0.25 / (40 * 0.04)));
    CHECK(var_diff_medians(0.3, 0.3, 20, 20) == doctest::Approx(1 / (2 * 20 * 0.09)));
    try {
        var_diff_medians(0.0, 0.2, 10, 10);
        FAIL("expected ZeroDensity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroDensity);
    }
}

TEST_CASE("var_diff_medians_shift") {
    CHECK(var_diff_medians_shift(0.3, 0.3, 20, 30) == doctest::Approx(var_diff_medians(0.3, 0.3, 20, 30)));
    CHECK(var_diff_medians_shift(0.1, 0.2, 100, 100) == doctest::Approx(0.2222).epsilon(1e-4));
    CHECK_THROWS_AS(var_diff_medians_shift(0.1, 0.2, 100, 0), Error);
}

TEST_CASE("property: var_diff_medians decreases in n and density") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double f1 = u(rng), f2 = u(rng), n1 = 2 + 100 * u(rng), n2 = 2 + 100 * u(rng);
        const double v = var_diff_medians(f1, f2, n1, n2);
        CHECK(var_diff_medians(f1 * 1.1, f2, n1, n2) < v);
        CHECK(var_diff_medians(f1, f2 * 1.1, n1, n2) < v);
        CHECK(var_diff_medians(f1, f2, n1 + 1, n2) < v);
        CHECK(var_diff_medians(f1, f2, n1, n2 + 1) < v);
    }
}

TEST_CASE("qe_effect") {
    StudyRecord kwak{"Kwak", s2(681, 7.5, 12.5, 19.75), s2(681, 3.5, 6.5, 19.75)};
    CHECK(qe_effect(kwak).effect == doctest::Approx(6.0));
    StudyRecord cohen{"Cohen", s2(90, 2.6, 3.8, 5.7), s2(156, 5.8, 6.8, 8.59)};
    CHECK(qe_effect(cohen).effect == doctest::Approx(-3.0));
    StudyRecord ms{"m", mean_sd(50, 36, 7), mean_sd(50, 35, 7)};
    const auto e = qe_effect(ms);
    CHECK(e.effect == doctest::Approx(1.0));
    // sigma^2 = (n - 1)/n sd^2
    CHECK(e.variance == doctest::Approx(std::numbers::pi * 49 * 49 / 50 / 50));
    CHECK(e.kind == EffectKind::DiffMeans);
}

TEST_CASE("property: QE variance matches the normal identity on exact summaries") {
    StudyRecord s{"n", exact_summary(Family::Normal, {36, 7}, Scenario::S3, 80),
                  exact_summary(Family::Normal, {35, 7}, Scenario::S3, 60)};
    const double expected = std::numbers::pi * 49 * (1.0 / 80 + 1.0 / 60) / 2;
    CHECK(qe_effect(s).variance == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("qe_bc_effect") {
    StudyRecord s{"bc", s2(50, 30, 36, 40), s2(50, 30, 35, 40)};
    const auto e = qe_bc_effect(s, {0.05699, 0.05699});
    CHECK(e.effect == doctest::Approx(1.0));
    CHECK(e.variance == doctest::Approx(3.079).epsilon(1e-3));
    const auto big = qe_bc_effect(s, {1e6, 0.05699});
    CHECK(big.variance == doctest::Approx(0.25 / (50 * 0.05699 * 0.05699)).epsilon(1e-6));
    StudyRecord eq{"eq", s2(50, 30, 35, 40), s2(50, 30, 35, 40)};
    CHECK(qe_bc_effect(eq, {0.1, 0.2}).effect == 0.0);
    CHECK(qe_effect_shift(eq).variance > 0.0);
}
