#include "medmeta/pooling.hpp"

#include "medmeta/distributions.hpp"
#include "medmeta/error.hpp"

#include <cmath>

namespace medmeta {

std::string_view to_string(PoolModel m) noexcept {
    return m == PoolModel::FixedEffect ? "fixed" : "random";
}

namespace {

void check_input(std::span<const EffectEstimate> effects) {
    if (effects.empty()) throw Error(ErrorCode::EmptyInput, "no studies to pool");
    for (const auto& e : effects) {
        if (!(e.variance > 0.0) || !std::isfinite(e.variance)) {
            throw Error(ErrorCode::NonPositiveVariance,
                        "study '" + e.study_id + "' has a non-positive variance");
        }
        if (!std::isfinite(e.effect)) {
            throw Error(ErrorCode::InvalidParams, "study '" + e.study_id + "' has no effect");
        }
    }
}

struct Heterogeneity {
    double q = 0.0;
    double sum_w = 0.0;
    double sum_w2 = 0.0;
};

Heterogeneity heterogeneity(std::span<const EffectEstimate> effects) {
    Heterogeneity h;
    double sum_wy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / e.variance;
        h.sum_w += w;
        h.sum_w2 += w * w;
        sum_wy += w * e.effect;
    }
    const double theta = sum_wy / h.sum_w;
    for (const auto& e : effects) {
        const double r = e.effect - theta;
        h.q += r * r / e.variance;
    }
    return h;
}

PoolResult weighted(std::span<const EffectEstimate> effects, double tau2, PoolModel model) {
    PoolResult out;
    out.model = model;
    out.tau2 = tau2;
    out.weights.reserve(effects.size());
    double sum_w = 0.0;
    double sum_wy = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (e.variance + tau2);
        out.weights.push_back(w);
        sum_w += w;
        sum_wy += w * e.effect;
    }
    out.pooled = sum_wy / sum_w;
    out.variance = 1.0 / sum_w;
    const double half = kZ975 * std::sqrt(out.variance);
    out.ci_low = out.pooled - half;
    out.ci_high = out.pooled + half;

    const auto h = heterogeneity(effects);
    const double df = static_cast<double>(effects.size()) - 1.0;
    out.q_stat = h.q;
    out.i2 = h.q > 0.0 ? std::max(0.0, (h.q - df) / h.q) * 100.0 : 0.0;
    out.het_p = chi2_sf(h.q, df);
    return out;
}

} // namespace

double dersimonian_laird_tau2(std::span<const EffectEstimate> effects) {
    check_input(effects);
    if (effects.size() == 1) return 0.0;
    const auto h = heterogeneity(effects);
    const double df = static_cast<double>(effects.size()) - 1.0;
    const double denom = h.sum_w - h.sum_w2 / h.sum_w;
    if (!(denom > 0.0)) return 0.0;
    return std::max(0.0, (h.q - df) / denom);
}

PoolResult pool_fixed(std::span<const EffectEstimate> effects) {
    check_input(effects);
    return weighted(effects, 0.0, PoolModel::FixedEffect);
}

PoolResult pool_random(std::span<const EffectEstimate> effects) {
    const double tau2 = dersimonian_laird_tau2(effects);
    return weighted(effects, tau2, PoolModel::RandomEffects);
}

PoolResult pool(std::span<const EffectEstimate> effects, PoolModel model) {
    return model == PoolModel::FixedEffect ? pool_fixed(effects) : pool_random(effects);
}

} // namespace medmeta
