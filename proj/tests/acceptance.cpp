#include "medmeta/distributions.hpp"
#include "medmeta/median_methods.hpp"
#include "medmeta/pooling.hpp"
#include "medmeta/report.hpp"
#include "medmeta/shapiro_wilk.hpp"
#include "medmeta/sim_lab.hpp"
#include "medmeta/stats.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace medmeta;

namespace {

using Clock = std::chrono::steady_clock;
using Big = boost::multiprecision::cpp_bin_float_50;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const MethodMetrics& metrics_for(const SimMetrics& m, Method method) {
    for (const auto& x : m.methods) {
        if (x.method == method) return x;
    }
    throw std::runtime_error("method missing from metrics");
}

void criterion1() {
    const auto start = Clock::now();
    const auto data = read_csv_file(MEDIAN_META_FIXTURE_DIR "/tb.csv");
    MethodContext ctx;
    const auto r = analyze(data, {Method::Qe, Method::Mdm}, ctx);
    const double secs = seconds_since(start);
    const double expected[] = {1.00, 1.00, 6.00, 0.04, 4.00, 0.59, 0.20, -3.00, 1.00};
    const double tol[] = {5e-3, 5e-3, 5e-3, 5e-3, 5e-3, 0.01 + 1e-9, 5e-3, 5e-3, 5e-3};
    bool ok = r.methods[0].outcome && r.methods[1].outcome;
    std::string effects;
    if (ok) {
        const auto& qe = *r.methods[0].outcome;
        for (std::size_t i = 0; i < 9; ++i) {
            ok = ok && std::abs(qe.effects[i].effect - expected[i]) <= tol[i];
            effects += fmt("%s%.2f", i ? "," : "", qe.effects[i].effect);
        }
        ok = ok && r.methods[1].outcome->pooled == 1.0;
    }
    ok = ok && secs < 1.0;
    report(1, ok, fmt("TB differences of medians (%s), MDM pooled %.2f, %.3f s", effects.c_str(),
                      ok ? r.methods[1].outcome->pooled : std::nan(""), secs));
}

void criterion2() {
    const auto start = Clock::now();
    const auto data = read_csv_file(MEDIAN_META_FIXTURE_DIR "/tb.csv");
    MethodContext ctx;
    ctx.model = PoolModel::RandomEffects;
    const auto out = run_method(data, Method::Qe, ctx);
    const double secs = seconds_since(start);
    const bool ok = out.pooled >= 0.8 && out.pooled <= 1.3 && out.pool->i2 >= 95.0 && secs < 5.0;
    report(2, ok, fmt("TB QE random effects pooled %.3f [%.3f, %.3f], I2 %.2f%%, %.3f s",
                      out.pooled, out.ci_low, out.ci_high, out.pool->i2, secs));
}

void criterion3() {
    const auto start = Clock::now();
    SimConfig c;
    c.n_studies = 10;
    c.median_n = 50;
    c.outcome = Outcome::NormalModerate;
    c.heterogeneity = Heterogeneity::I25;
    c.reporting = Reporting::S1;
    c.replications = 500;
    c.seed = 20180917;
    const auto m = run_simulation(c, {Method::Qe});
    const double secs = seconds_since(start);
    const auto& qe = metrics_for(m, Method::Qe);
    const bool ok = std::abs(qe.relative_error.median) < 4 && qe.coverage >= 0.90 &&
                    qe.coverage <= 0.97 && std::abs(qe.variance_of_estimates - 0.32) <= 0.07 &&
                    secs < 180;
    report(3, ok, fmt("S1/Normal QE median RE %.2f%%, coverage %.3f, variance %.3f, %d failures, %.1f s",
                      qe.relative_error.median, qe.coverage, qe.variance_of_estimates, qe.failures, secs));
}

void criterion4() {
    const auto start = Clock::now();
    SimConfig c;
    c.n_studies = 10;
    c.median_n = 50;
    c.outcome = Outcome::Mixture;
    c.heterogeneity = Heterogeneity::I25;
    c.reporting = Reporting::S2;
    c.replications = 500;
    c.seed = 20180917;
    c.model = PoolModel::FixedEffect;
    const auto m = run_simulation(c, {Method::Wan, Method::Qe});
    const double secs = seconds_since(start);
    const auto& wan = metrics_for(m, Method::Wan);
    const auto& qe = metrics_for(m, Method::Qe);
    const bool ok = wan.relative_error.median > -27 && wan.relative_error.median < -16 &&
                    wan.coverage <= 0.20 && std::abs(qe.relative_error.median) < 4 &&
                    qe.coverage >= 0.85 && secs < 180;
    report(4, ok, fmt("S2/Mixture fixed effect: Wan median RE %.2f%%, coverage %.3f; QE median RE %.2f%%, "
                      "coverage %.3f, %.1f s",
                      wan.relative_error.median, wan.coverage, qe.relative_error.median, qe.coverage, secs));
}

void criterion5() {
    using boost::multiprecision::cpp_int;
    bool ok = true;
    double worst = 1.0;
    double k10 = 0.0;
    for (int k = 6; k <= 100; ++k) {
        std::vector<double> y(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) y[static_cast<std::size_t>(i)] = i;
        const auto r = mdm(y);
        const int rank = static_cast<int>(r.lower_rank);
        // exact: 1 - 2 * sum_{j < r} C(k, j) / 2^k in integer arithmetic
        cpp_int tail = 0;
        cpp_int c = 1;
        for (int j = 0; j < rank; ++j) {
            tail += c;
            c = c * (k - j) / (j + 1);
        }
        const cpp_int total = cpp_int(1) << k;
        const double exact = static_cast<double>(Big(total - 2 * tail) / Big(total));
        ok = ok && exact >= 0.95 && std::abs(exact - r.attained_coverage) < 1e-12;
        worst = std::min(worst, exact);
        if (k == 10) k10 = exact;
    }
    ok = ok && std::abs(k10 - 0.9785) <= 1e-4;
    report(5, ok, fmt("exact MDM coverage min over k=6..100 is %.6f; k=10 gives %.6f", worst, k10));
}

void criterion6() {
    std::size_t cases = 0;
    double worst = 0.0;
    std::vector<int> ys;
    std::vector<int> vs;
    auto relerr = [](double got, const Big& want) {
        const Big diff = abs(Big(got) - want);
        const Big scale = abs(want);
        return scale < Big(1e-15) ? static_cast<double>(diff) : static_cast<double>(diff / scale);
    };
    std::function<void(int)> rec = [&](int k) {
        if (static_cast<int>(ys.size()) == k) {
            std::vector<EffectEstimate> e(static_cast<std::size_t>(k));
            Big sw = 0, swy = 0, sw2 = 0;
            for (int i = 0; i < k; ++i) {
                e[static_cast<std::size_t>(i)].effect = ys[static_cast<std::size_t>(i)];
                e[static_cast<std::size_t>(i)].variance = vs[static_cast<std::size_t>(i)];
                const Big w = Big(1) / vs[static_cast<std::size_t>(i)];
                sw += w;
                swy += w * ys[static_cast<std::size_t>(i)];
                sw2 += w * w;
            }
            const Big fe = swy / sw;
            Big q = 0;
            for (int i = 0; i < k; ++i) {
                const Big d = Big(ys[static_cast<std::size_t>(i)]) - fe;
                q += d * d / vs[static_cast<std::size_t>(i)];
            }
            Big tau2 = 0;
            if (k > 1) {
                const Big moment = (q - (k - 1)) / (sw - sw2 / sw);
                if (moment > 0) tau2 = moment;
            }
            Big rw = 0, rwy = 0;
            for (int i = 0; i < k; ++i) {
                const Big w = Big(1) / (vs[static_cast<std::size_t>(i)] + tau2);
                rw += w;
                rwy += w * ys[static_cast<std::size_t>(i)];
            }
            const Big re = rwy / rw;
            const auto f = pool_fixed(e);
            const auto r = pool_random(e);
            worst = std::max({worst, relerr(f.pooled, fe), relerr(r.pooled, re), relerr(r.tau2, tau2)});
            ++cases;
            return;
        }
        for (int y = -3; y <= 3; ++y) {
            for (int v = 1; v <= 2; ++v) {
                ys.push_back(y);
                vs.push_back(v);
                rec(k);
                ys.pop_back();
                vs.pop_back();
            }
        }
    };
    for (int k = 1; k <= 4; ++k) rec(k);
    report(6, worst <= 1e-12,
           fmt("%zu toy inputs, worst relative deviation from the 50-digit oracle %.3g", cases, worst));
}

void criterion7() {
    const auto start = Clock::now();
    const std::pair<Family, Params> truth[] = {{Family::Normal, {35, 7}},
                                               {Family::LogNormal, {1.2, 0.6}},
                                               {Family::Gamma, {3, 0.5}},
                                               {Family::Weibull, {8, 1.5}}};
    int good = 0;
    double worst = 0.0;
    for (const auto& [family, params] : truth) {
        for (Scenario s : {Scenario::S1, Scenario::S2, Scenario::S3}) {
            const int n = 100;
            GroupSummary g;
            g.n = n;
            g.median = quantile(family, params, 0.5);
            if (s != Scenario::S2) {
                g.min = quantile(family, params, 1.0 / n);
                g.max = quantile(family, params, 1.0 - 1.0 / n);
            }
            if (s != Scenario::S1) {
                g.q1 = quantile(family, params, 0.25);
                g.q3 = quantile(family, params, 0.75);
            }
            const auto fit = qe_fit(g);
            worst = std::max(worst, fit.objective);
            const bool recovered = std::abs(fit.params.theta1 - params.theta1) <= 1e-3 * std::abs(params.theta1) &&
                                   std::abs(fit.params.theta2 - params.theta2) <= 1e-3 * params.theta2;
            if (fit.family == family && fit.objective < 1e-8 && recovered) ++good;
        }
    }
    const double secs = seconds_since(start);
    report(7, good == 12 && secs < 30,
           fmt("%d/12 family x scenario fits recovered, worst objective %.3g, %.2f s", good, worst, secs));
}

void criterion8() {
    double worst = 0.0;
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    std::uniform_real_distribution<double> loc(-10, 10);
    const double probes[] = {0.001, 0.01, 0.25, 0.5, 0.75, 0.99, 0.999};
    for (int rep = 0; rep < 50; ++rep) {
        for (Family f : {Family::Normal, Family::LogNormal, Family::Gamma, Family::Weibull}) {
            const Params p = f == Family::Normal      ? Params{loc(rng), u(rng)}
                             : f == Family::LogNormal ? Params{loc(rng) / 5, u(rng) / 2}
                                                      : Params{u(rng), u(rng)};
            for (double prob : probes) worst = std::max(worst, std::abs(cdf(f, p, quantile(f, p, prob)) - prob));
        }
    }
    const auto mix = simulation_mixture();
    for (double prob : probes) worst = std::max(worst, std::abs(mix.cdf(mix.quantile(prob)) - prob));
    Rng draws(20180917);
    const auto x = mix.sample(1000000, draws);
    const double mean = sample_mean(x);
    const double var = sample_variance(x);
    const bool ok = worst < 1e-9 && std::abs(mix.mean() - 41.13) < 0.005 && std::abs(mix.variance() - 59.6) < 0.05 &&
                    std::abs(mean - mix.mean()) < 0.1 && std::abs(var - mix.variance()) < 1.5;
    report(8, ok, fmt("round-trip max error %.3g; mixture analytic mean %.4f var %.3f; Monte Carlo mean %.4f var %.3f",
                      worst, mix.mean(), mix.variance(), mean, var));
}

void criterion9() {
    const auto start = Clock::now();
    SimConfig c;
    c.n_studies = 10;
    c.median_n = 50;
    c.outcome = Outcome::NormalModerate;
    c.heterogeneity = Heterogeneity::I25;
    c.reporting = Reporting::S2;
    c.replications = 50;
    c.seed = 20180917;
    c.abc.iterations_per_family = 5000;
    c.abc.acceptance_rate = 0.004;
    const auto m = run_simulation(c, {Method::Qe, Method::AbcSds});
    const double secs = seconds_since(start);
    const auto& qe = metrics_for(m, Method::Qe);
    const auto& abc = metrics_for(m, Method::AbcSds);
    std::vector<double> diffs;
    for (std::size_t i = 0; i < qe.estimates.size(); ++i) {
        if (std::isfinite(qe.estimates[i]) && std::isfinite(abc.estimates[i])) {
            diffs.push_back(std::abs(qe.estimates[i] - abc.estimates[i]));
        }
    }
    const double med = diffs.empty() ? std::nan("") : sample_median(diffs);
    const bool ok = diffs.size() == 50 && med < 0.1 && secs < 600;
    report(9, ok, fmt("median |ABC-SDS - QE| over %zu meta-analyses %.4f, %.1f s", diffs.size(), med, secs));
}

void criterion10() {
    Rng rng(10);
    std::normal_distribution<double> z;
    std::vector<double> x(100);
    int reject = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        for (auto& v : x) v = z(rng);
        if (shapiro_wilk(x).p_value < 0.05) ++reject;
    }
    const double rate = static_cast<double>(reject) / reps;
    report(10, std::abs(rate - 0.05) <= 0.01, fmt("Shapiro-Wilk rejection rate %.4f on normal samples", rate));
}

} // namespace

int main() {
    const std::function<void()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                              criterion6, criterion7, criterion8, criterion9, criterion10};
    for (std::size_t i = 0; i < std::size(criteria); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
