#include "medmeta/abc.hpp"

#include "medmeta/error.hpp"
#include "medmeta/seeding.hpp"
#include "medmeta/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string_view>

namespace medmeta {

void validate(const AbcConfig& cfg) {
    if (cfg.families.empty()) {
        throw Error(ErrorCode::InvalidConfig, "ABC needs at least one candidate family");
    }
    if (!(cfg.acceptance_rate > 0.0 && cfg.acceptance_rate <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "acceptance rate must lie in (0, 1]");
    }
    if (cfg.iterations_per_family < 1 || cfg.update_interval < 1) {
        throw Error(ErrorCode::InvalidConfig, "iteration counts must be positive");
    }
    if (cfg.acceptance_rate * cfg.iterations_per_family < 1.0 - 1e-9) {
        throw Error(ErrorCode::InvalidConfig,
                    "acceptance rate times iterations must retain at least one draw");
    }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Observed {
    std::array<double, 5> probs{};
    std::array<double, 5> values{};
    std::size_t size = 0;
    double lo = 0.0;  // location prior bounds
    double hi = 0.0;
};

Observed observed_summary(const GroupSummary& g) {
    const Scenario s = classify_scenario(g);
    if (s == Scenario::MeanSd) {
        throw Error(ErrorCode::WrongScenario, "ABC density estimation needs S1, S2 or S3");
    }
    Observed o;
    auto add = [&](double p, double v) {
        o.probs[o.size] = p;
        o.values[o.size] = v;
        ++o.size;
    };
    if (s != Scenario::S2) add(0.0, *g.min);
    if (s != Scenario::S1) add(0.25, *g.q1);
    add(0.5, *g.median);
    if (s != Scenario::S1) add(0.75, *g.q3);
    if (s != Scenario::S2) add(1.0, *g.max);
    o.lo = s == Scenario::S1 ? *g.min : *g.q1;
    o.hi = s == Scenario::S1 ? *g.max : *g.q3;
    return o;
}

struct Prior {
    double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
};

std::optional<Prior> prior_for(Family f, const Observed& o, const AbcPriors& p) {
    const bool positive_data =
        std::all_of(o.values.begin(), o.values.begin() + static_cast<std::ptrdiff_t>(o.size),
                    [](double v) { return v > 0.0; });
    Prior out;
    switch (f) {
    case Family::Normal: out = {o.lo, o.hi, 0.0, p.normal_sigma_max}; break;
    case Family::LogNormal:
        if (!positive_data) return std::nullopt;
        out = {std::log(o.lo), std::log(o.hi), 0.0, p.lognormal_sigma_max};
        break;
    case Family::Gamma:
        if (!positive_data) return std::nullopt;
        out = {0.0, p.gamma_shape_max, 0.0, p.gamma_rate_max};
        break;
    case Family::Weibull:
        if (!positive_data) return std::nullopt;
        out = {0.0, p.weibull_scale_max, 0.0, p.weibull_shape_max};
        break;
    case Family::NormalMixture: return std::nullopt;
    }
    if (!(out.lo1 < out.hi1) || !(out.lo2 < out.hi2)) return std::nullopt;
    return out;
}

// Uniform on the open interval (lo, hi).
double open_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    double v = u(rng);
    while (v <= lo || v >= hi) v = u(rng);
    return v;
}

void simulate(Family f, Params p, std::span<double> out, Rng& rng) {
    switch (f) {
    case Family::Normal: {
        std::normal_distribution<double> d(p.theta1, p.theta2);
        for (auto& x : out) x = d(rng);
        break;
    }
    case Family::LogNormal: {
        std::normal_distribution<double> d(p.theta1, p.theta2);
        for (auto& x : out) x = std::exp(d(rng));
        break;
    }
    case Family::Gamma: {
        std::gamma_distribution<double> d(p.theta1, 1.0 / p.theta2);
        for (auto& x : out) x = d(rng);
        break;
    }
    case Family::Weibull: {
        std::weibull_distribution<double> d(p.theta2, p.theta1);
        for (auto& x : out) x = d(rng);
        break;
    }
    case Family::NormalMixture: break;
    }
}

struct Draw {
    double distance = kInf;
    Params params{};
    std::size_t family = 0;
};

bool closer(const Draw& a, const Draw& b) { return a.distance < b.distance; }

// Family shares among the `keep` closest draws.
std::vector<double> shares_of_closest(std::vector<Draw> draws, std::size_t keep,
                                      std::size_t families) {
    std::vector<double> shares(families, 0.0);
    if (draws.empty()) return shares;
    keep = std::min(keep, draws.size());
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                     draws.end(), closer);
    for (std::size_t i = 0; i < keep; ++i) shares[draws[i].family] += 1.0;
    for (auto& s : shares) s /= static_cast<double>(keep);
    return shares;
}

} // namespace

AbcResult abc_fit(const GroupSummary& g, const AbcConfig& cfg) {
    validate(cfg);
    const Observed observed = observed_summary(g);

    std::vector<Family> families = cfg.families;
    std::sort(families.begin(), families.end());
    families.erase(std::unique(families.begin(), families.end()), families.end());

    std::vector<Family> active;
    std::vector<Prior> priors;
    for (Family f : families) {
        if (f == Family::NormalMixture) {
            throw Error(ErrorCode::InvalidConfig, "the normal mixture is not an ABC candidate");
        }
        if (const auto p = prior_for(f, observed, cfg.priors)) {
            active.push_back(f);
            priors.push_back(*p);
        }
    }
    if (active.empty()) {
        throw Error(ErrorCode::NoAcceptedDraws, "no candidate family admits the reported data");
    }

    const std::size_t k = active.size();
    const auto total = static_cast<std::size_t>(cfg.iterations_per_family) * k;
    const auto keep_global =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.acceptance_rate * total)));
    const auto keep_family = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.acceptance_rate * cfg.iterations_per_family)));

    Rng rng(cfg.seed);
    std::vector<double> proposal(k, 1.0 / static_cast<double>(k));
    std::vector<Draw> draws;
    draws.reserve(total);
    std::vector<double> buffer(static_cast<std::size_t>(g.n));
    std::array<double, 5> simulated{};

    std::discrete_distribution<std::size_t> pick(proposal.begin(), proposal.end());
    for (std::size_t it = 0; it < total; ++it) {
        const std::size_t fi = pick(rng);
        const Prior& prior = priors[fi];
        Draw d;
        d.family = fi;
        d.params = {open_uniform(rng, prior.lo1, prior.hi1), open_uniform(rng, prior.lo2, prior.hi2)};
        simulate(active[fi], d.params, buffer, rng);
        select_quantiles(buffer, std::span(observed.probs).first(observed.size),
                         std::span(simulated).first(observed.size));
        double ss = 0.0;
        for (std::size_t i = 0; i < observed.size; ++i) {
            const double diff = simulated[i] - observed.values[i];
            ss += diff * diff;
        }
        d.distance = std::isfinite(ss) ? std::sqrt(ss) : kInf;
        draws.push_back(d);

        if ((it + 1) % static_cast<std::size_t>(cfg.update_interval) == 0 && it + 1 < total) {
            proposal = shares_of_closest(draws, keep_global, k);
            pick = std::discrete_distribution<std::size_t>(proposal.begin(), proposal.end());
        }
    }

    const auto probabilities = shares_of_closest(draws, keep_global, k);

    AbcResult result;
    for (std::size_t fi = 0; fi < k; ++fi) {
        std::vector<Draw> own;
        for (const auto& d : draws) {
            if (d.family == fi) own.push_back(d);
        }
        AbcFamilyPosterior post;
        post.family = active[fi];
        post.proposals = own.size();
        post.probability = probabilities[fi];
        const std::size_t keep = std::min(keep_family, own.size());
        std::partial_sort(own.begin(), own.begin() + static_cast<std::ptrdiff_t>(keep), own.end(),
                          closer);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {
            post.accepted.push_back(own[i].params);
            s1 += own[i].params.theta1;
            s2 += own[i].params.theta2;
        }
        if (keep > 0) {
            post.posterior_mean = {s1 / static_cast<double>(keep), s2 / static_cast<double>(keep)};
            if (params_valid(post.family, post.posterior_mean)) {
                post.median = quantile_unchecked(post.family, post.posterior_mean, 0.5);
                post.density_at_median = pdf_unchecked(post.family, post.posterior_mean, post.median);
            }
        }
        result.families.push_back(std::move(post));
    }

    // Families whose posterior mean has no finite density cannot carry weight.
    double mass = 0.0;
    for (auto& f : result.families) {
        const bool ok = std::isfinite(f.density_at_median) && f.density_at_median > 0.0;
        if (!ok) f.probability = 0.0;
        mass += f.probability;
    }
    if (!(mass > 0.0)) throw Error(ErrorCode::NoAcceptedDraws, "no usable accepted draws");

    const AbcFamilyPosterior* best = nullptr;
    for (auto& f : result.families) {
        f.probability /= mass;
        result.f_m_bma += f.probability * (f.probability > 0.0 ? f.density_at_median : 0.0);
        if (!best || f.probability > best->probability) best = &f;
    }
    result.selected = best->family;
    result.f_m_sds = best->density_at_median;
    return result;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double abc_density(const GroupSummary& g, const AbcConfig& cfg, AbcMode mode) {
    if (classify_scenario(g) == Scenario::MeanSd) return estimated_density_at_median(g);
    const AbcResult r = abc_fit(g, cfg);
    return mode == AbcMode::SDS ? r.f_m_sds : r.f_m_bma;
}

} // namespace

EffectEstimate abc_effect(const StudyRecord& s, const AbcConfig& cfg, AbcMode mode) {
    AbcConfig c1 = cfg;
    AbcConfig c2 = cfg;
    c1.seed = derive_seed(cfg.seed, {fnv1a(s.id), 1});
    c2.seed = derive_seed(cfg.seed, {fnv1a(s.id), 2});
    const double f1 = abc_density(s.group1, c1, mode);
    const double f2 = abc_density(s.group2, c2, mode);

    EffectEstimate out;
    out.study_id = s.id;
    out.effect = difference_of_centers(s);
    out.variance = var_diff_medians(f1, f2, s.group1.n, s.group2.n);
    out.kind = classify_study(s) == Scenario::MeanSd ? EffectKind::DiffMeans
                                                      : EffectKind::DiffMedians;
    out.method = mode == AbcMode::SDS ? "abc-sds" : "abc-bma";
    return out;
}

} // namespace medmeta
