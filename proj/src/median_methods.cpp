#include "medmeta/median_methods.hpp"

#include "medmeta/error.hpp"
#include "medmeta/optimize.hpp"
#include "medmeta/pooling.hpp"
#include "medmeta/seeding.hpp"
#include "medmeta/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace medmeta {

namespace {

std::vector<double> sorted_copy(std::span<const double> effects) {
    if (effects.empty()) throw Error(ErrorCode::EmptyInput, "no study effects");
    std::vector<double> v(effects.begin(), effects.end());
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

MdmResult mdm(std::span<const double> effects) {
    const auto sorted = sorted_copy(effects);
    const int k = static_cast<int>(sorted.size());

    MdmResult out;
    out.pooled = sorted_quantile(sorted, 0.5);

    int r = 0;
    while (r + 1 <= k / 2 + 1 && 2.0 * binomial_half_cdf(r, k) <= 0.05) ++r;
    if (r == 0) {
        out.nominal = false;
        r = 1;
    }
    out.lower_rank = r;
    out.upper_rank = k + 1 - r;
    out.ci_low = sorted[static_cast<std::size_t>(r - 1)];
    out.ci_high = sorted[static_cast<std::size_t>(k - r)];
    out.attained_coverage = 1.0 - 2.0 * binomial_half_cdf(r - 1, k);
    return out;
}

MdmResult mdm_normal_approx(std::span<const double> effects) {
    const auto sorted = sorted_copy(effects);
    const double k = static_cast<double>(sorted.size());

    MdmResult out;
    out.pooled = sorted_quantile(sorted, 0.5);
    const double half = std::min(0.5, kZ975 / (2.0 * std::sqrt(k)));
    const double p_lo = 0.5 - half;
    const double p_hi = 0.5 + half;
    out.ci_low = sorted_quantile(sorted, p_lo);
    out.ci_high = sorted_quantile(sorted, p_hi);
    out.lower_rank = 1.0 + p_lo * (k - 1.0);
    out.upper_rank = 1.0 + p_hi * (k - 1.0);
    out.attained_coverage = 2.0 * normal_cdf(2.0 * std::sqrt(k) * half) - 1.0;
    out.nominal = half < 0.5;
    return out;
}

double difference_of_centers(const StudyRecord& s) {
    const Scenario scenario = classify_study(s);
    if (scenario == Scenario::MeanSd) return *s.group1.mean - *s.group2.mean;
    return *s.group1.median - *s.group2.median;
}

// ---------------------------------------------------------------------------
// Quantile estimation
// ---------------------------------------------------------------------------

namespace {

// Reported quantiles and the probabilities they estimate.
struct Targets {
    std::array<double, 5> probs{};
    std::array<double, 5> values{};
    std::size_t size = 0;

    void add(double p, double v) {
        probs[size] = p;
        values[size] = v;
        ++size;
    }
};

Targets targets_for(const GroupSummary& g) {
    const Scenario s = classify_scenario(g);
    if (s == Scenario::MeanSd) {
        throw Error(ErrorCode::WrongScenario, "quantile estimation needs S1, S2 or S3 summaries");
    }
    const double n = g.n;
    Targets t;
    if (s != Scenario::S2) t.add(1.0 / n, *g.min);
    if (s != Scenario::S1) t.add(0.25, *g.q1);
    t.add(0.5, *g.median);
    if (s != Scenario::S1) t.add(0.75, *g.q3);
    if (s != Scenario::S2) t.add(1.0 - 1.0 / n, *g.max);
    return t;
}

double objective(const Targets& t, Family family, Params params) {
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size; ++i) {
        const double d = quantile_unchecked(family, params, t.probs[i]) - t.values[i];
        ss += d * d;
    }
    return ss;
}

bool positive_family(Family f) { return f != Family::Normal; }

// The optimizer works on (mu, log sigma) for location families and on logs
// of both parameters for the gamma and Weibull fits.
struct Coordinates {
    bool log_first = false;
    Box box;

    Params to_params(std::span<const double> z) const {
        return {log_first ? std::exp(z[0]) : z[0], std::exp(z[1])};
    }
};

std::optional<Coordinates> coordinates_for(Family family, const GroupSummary& g,
                                           const ConstraintTable& c) {
    const Scenario s = classify_scenario(g);
    const double lo = s == Scenario::S1 ? *g.min : *g.q1;
    const double hi = s == Scenario::S1 ? *g.max : *g.q3;
    Interval first;
    Interval second;
    bool log_first = true;
    switch (family) {
    case Family::Normal:
        first = {lo, hi};
        second = c.normal_sigma;
        log_first = false;
        break;
    case Family::LogNormal:
        first = {std::log(lo), std::log(hi)};
        second = c.lognormal_sigma;
        log_first = false;
        break;
    case Family::Gamma:
        first = c.gamma_shape;
        second = c.gamma_rate;
        break;
    case Family::Weibull:
        first = c.weibull_scale;
        second = c.weibull_shape;
        break;
    case Family::NormalMixture: return std::nullopt;
    }
    if (!(first.lower < first.upper) || !(second.lower < second.upper) || !(second.lower > 0.0) ||
        (log_first && !(first.lower > 0.0))) {
        return std::nullopt;
    }
    Coordinates out;
    out.log_first = log_first;
    out.box.lower = {log_first ? std::log(first.lower) : first.lower, std::log(second.lower)};
    out.box.upper = {log_first ? std::log(first.upper) : first.upper, std::log(second.upper)};
    return out;
}

// Latin hypercube over the optimizer box.
std::vector<std::array<double, 2>> latin_starts(const Box& box, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 2>> out(static_cast<std::size_t>(count));
    for (std::size_t dim = 0; dim < 2; ++dim) {
        std::vector<int> strata(static_cast<std::size_t>(count));
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        const double width = box.upper[dim] - box.lower[dim];
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double u = (strata[i] + unit(rng)) / static_cast<double>(count);
            out[i][dim] = box.lower[dim] + u * width;
        }
    }
    return out;
}

FamilyFit fit_family(const GroupSummary& g, const Targets& targets, Family family,
                     const QEConfig& cfg) {
    FamilyFit out;
    out.family = family;
    if (positive_family(family)) {
        for (std::size_t i = 0; i < targets.size; ++i) {
            if (!(targets.values[i] > 0.0)) {
                out.skipped = ErrorCode::NonPositiveSupport;
                return out;
            }
        }
    }
    const auto coords = coordinates_for(family, g, cfg.constraints);
    if (!coords) {
        out.skipped = ErrorCode::InvalidParams;
        return out;
    }

    // Gamma quantiles factor as unit-rate quantiles over the rate, so the
    // expensive inversion is cached per shape value.
    double cached_shape = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 5> unit_quantiles{};
    Objective f;
    if (family == Family::Gamma) {
        f = [&](std::span<const double> z) {
            const Params p = coords->to_params(z);
            if (p.theta1 != cached_shape) {
                cached_shape = p.theta1;
                for (std::size_t i = 0; i < targets.size; ++i) {
                    unit_quantiles[i] = quantile_unchecked(Family::Gamma, {p.theta1, 1.0},
                                                           targets.probs[i]);
                }
            }
            double ss = 0.0;
            for (std::size_t i = 0; i < targets.size; ++i) {
                const double d = unit_quantiles[i] / p.theta2 - targets.values[i];
                ss += d * d;
            }
            return ss;
        };
    } else {
        f = [&](std::span<const double> z) {
            return objective(targets, family, coords->to_params(z));
        };
    }

    MinimizeOptions opt;
    opt.rel_tol = cfg.convergence_tol;
    opt.max_iterations = cfg.max_iterations;

    const std::uint64_t seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(family)});
    std::optional<MinimizeResult> best;
    for (const auto& start : latin_starts(coords->box, std::max(cfg.starts, 1), seed)) {
        auto r = minimize_box(f, {start[0], start[1]}, coords->box, opt);
        if (!std::isfinite(r.value)) continue;
        const bool better = !best || (r.converged && !best->converged) ||
                            (r.converged == best->converged && r.value < best->value);
        if (better) best = std::move(r);
    }
    if (!best) {
        out.skipped = ErrorCode::NoConvergence;
        return out;
    }

    FittedDensity fit;
    fit.family = family;
    fit.params = coords->to_params(best->x);
    fit.objective = best->value;
    fit.converged = best->converged;
    fit.median = quantile_unchecked(family, fit.params, 0.5);
    fit.density_at_median = pdf_unchecked(family, fit.params, fit.median);
    out.fit = fit;
    out.usable = fit.converged && std::isfinite(fit.objective) &&
                 std::isfinite(fit.density_at_median) && fit.density_at_median > 0.0 &&
                 fit.density_at_median <= cfg.density_cap;
    return out;
}

int family_rank(Family f) { return static_cast<int>(f); }

} // namespace

double sp_objective(const GroupSummary& g, Family family, Params params) {
    if (family == Family::NormalMixture || !params_valid(family, params)) {
        throw Error(ErrorCode::InvalidParams, "invalid candidate parameters");
    }
    return objective(targets_for(g), family, params);
}

std::vector<FamilyFit> qe_fit_candidates(const GroupSummary& g, const QEConfig& cfg) {
    if (cfg.candidate_families.empty()) {
        throw Error(ErrorCode::InvalidConfig, "at least one candidate family is required");
    }
    const Targets targets = targets_for(g);
    // Canonical order makes the result independent of how the caller lists
    // the candidates.
    std::vector<Family> families = cfg.candidate_families;
    std::sort(families.begin(), families.end(),
              [](Family a, Family b) { return family_rank(a) < family_rank(b); });
    families.erase(std::unique(families.begin(), families.end()), families.end());

    std::vector<FamilyFit> out;
    for (Family f : families) {
        if (f == Family::NormalMixture) {
            throw Error(ErrorCode::InvalidConfig, "the normal mixture is not a QE candidate");
        }
        out.push_back(fit_family(g, targets, f, cfg));
    }
    return out;
}

FittedDensity qe_fit(const GroupSummary& g, const QEConfig& cfg) {
    const auto candidates = qe_fit_candidates(g, cfg);
    const FittedDensity* best = nullptr;
    for (const auto& c : candidates) {
        if (!c.usable) continue;
        if (!best || c.fit->objective < best->objective - 1e-10) best = &*c.fit;
    }
    if (!best) {
        throw Error(ErrorCode::NoConvergence, "no candidate distribution could be fitted");
    }
    return *best;
}

double var_diff_medians(double f1, double f2, double n1, double n2) {
    if (!(f1 > 0.0) || !(f2 > 0.0)) {
        throw Error(ErrorCode::ZeroDensity, "density at the median must be positive");
    }
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "sample sizes must be positive");
    }
    return 0.25 * (1.0 / (n1 * f1 * f1) + 1.0 / (n2 * f2 * f2));
}

double var_diff_medians(const FittedDensity& fit1, const FittedDensity& fit2, double n1,
                        double n2) {
    return var_diff_medians(fit1.density_at_median, fit2.density_at_median, n1, n2);
}

double var_diff_medians_shift(double f1, double f2, double n1, double n2) {
    if (!(f1 > 0.0) || !(f2 > 0.0)) {
        throw Error(ErrorCode::ZeroDensity, "density at the median must be positive");
    }
    if (!(n1 > 0.0) || !(n2 > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "sample sizes must be positive");
    }
    const double f = (n1 * f1 + n2 * f2) / (n1 + n2);
    return (1.0 / (4.0 * f * f)) * (1.0 / n1 + 1.0 / n2);
}

double estimated_density_at_median(const GroupSummary& g, const QEConfig& cfg) {
    if (classify_scenario(g) == Scenario::MeanSd) {
        const double sigma = *g.sd * std::sqrt((g.n - 1.0) / g.n);
        if (!(sigma > 0.0)) {
            throw Error(ErrorCode::ZeroDensity, "zero standard deviation gives no finite density");
        }
        return 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    return qe_fit(g, cfg).density_at_median;
}

namespace {

EffectEstimate median_effect(const StudyRecord& s, double variance, const char* method) {
    EffectEstimate out;
    out.study_id = s.id;
    out.effect = difference_of_centers(s);
    out.variance = variance;
    out.kind = classify_study(s) == Scenario::MeanSd ? EffectKind::DiffMeans
                                                      : EffectKind::DiffMedians;
    out.method = method;
    return out;
}

} // namespace

EffectEstimate qe_effect(const StudyRecord& s, const QEConfig& cfg) {
    const double f1 = estimated_density_at_median(s.group1, cfg);
    const double f2 = estimated_density_at_median(s.group2, cfg);
    return median_effect(s, var_diff_medians(f1, f2, s.group1.n, s.group2.n), "qe");
}

EffectEstimate qe_effect_shift(const StudyRecord& s, const QEConfig& cfg) {
    const double f1 = estimated_density_at_median(s.group1, cfg);
    const double f2 = estimated_density_at_median(s.group2, cfg);
    return median_effect(s, var_diff_medians_shift(f1, f2, s.group1.n, s.group2.n), "qe-shift");
}

EffectEstimate qe_bc_effect(const StudyRecord& s, std::pair<double, double> true_densities) {
    const double v =
        var_diff_medians(true_densities.first, true_densities.second, s.group1.n, s.group2.n);
    return median_effect(s, v, "qe-bc");
}

} // namespace medmeta
