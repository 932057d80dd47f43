#include "medmeta/stats.hpp"

#include "medmeta/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace medmeta {

double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    p = std::clamp(p, 0.0, 1.0);
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void select_quantiles(std::span<double> data, std::span<const double> probs,
                      std::span<double> out) {
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    const std::size_t n = data.size();
    // data[done] sits at its sorted position with everything after it >= it.
    std::size_t done = 0;
    auto ensure = [&](std::size_t idx) {
        if (idx < done) return;
        std::nth_element(data.begin() + static_cast<std::ptrdiff_t>(done),
                         data.begin() + static_cast<std::ptrdiff_t>(idx), data.end());
        done = idx;
    };
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double pos = std::clamp(probs[i], 0.0, 1.0) * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        ensure(lo);
        const double v_lo = data[lo];
        double v_hi = v_lo;
        if (frac > 0.0 && lo + 1 < n) {
            v_hi = *std::min_element(data.begin() + static_cast<std::ptrdiff_t>(lo + 1), data.end());
        }
        out[i] = v_lo + frac * (v_hi - v_lo);
    }
}

double sample_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return sorted_quantile(values, 0.5);
}

double sample_mean(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorCode::SampleTooSmall, "variance needs two values");
    const double m = sample_mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / static_cast<double>(values.size() - 1);
}

double binomial_half_cdf(int r, int k) {
    if (r < 0) return 0.0;
    if (r >= k) return 1.0;
    const double log_half_k = -static_cast<double>(k) * std::log(2.0);
    double total = 0.0;
    for (int j = 0; j <= r; ++j) {
        const double log_c =
            std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0);
        total += std::exp(log_c + log_half_k);
    }
    return std::min(total, 1.0);
}

} // namespace medmeta
