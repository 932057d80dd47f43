#pragma once

#include "medmeta/transform.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace medmeta {

enum class PoolModel { FixedEffect, RandomEffects };

std::string_view to_string(PoolModel m) noexcept;

inline constexpr double kZ975 = 1.959963984540054;

struct PoolResult {
    double pooled = 0.0;
    double variance = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double tau2 = 0.0;
    double q_stat = 0.0;
    double i2 = 0.0;     // percent, truncated at 0
    double het_p = 1.0;  // chi-squared upper tail on k - 1 df
    std::vector<double> weights;
    PoolModel model = PoolModel::FixedEffect;
};

// Inverse-variance fixed-effect pooling with Cochran's Q and I^2.
PoolResult pool_fixed(std::span<const EffectEstimate> effects);

// DerSimonian-Laird method-of-moments estimate of tau^2, truncated at 0.
double dersimonian_laird_tau2(std::span<const EffectEstimate> effects);

// Random-effects pooling with weights 1 / (sigma_i^2 + tau^2). Q, I^2 and
// the heterogeneity p-value use the fixed-effect weights.
PoolResult pool_random(std::span<const EffectEstimate> effects);

PoolResult pool(std::span<const EffectEstimate> effects, PoolModel model);

} // namespace medmeta
