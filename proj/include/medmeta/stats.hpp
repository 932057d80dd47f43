#pragma once

#include <span>
#include <vector>

namespace medmeta {

// Sample quantile of sorted data by linear interpolation of the empirical
// cdf at position p (n - 1) (zero-based), i.e. "type 7".
double sorted_quantile(std::span<const double> sorted, double p);

// Type-7 quantiles at ascending probabilities, reordering `data` in place
// with partial selection instead of a full sort. p = 0 and p = 1 give the
// minimum and maximum.
void select_quantiles(std::span<double> data, std::span<const double> probs,
                      std::span<double> out);

double sample_median(std::vector<double> values);
double sample_mean(std::span<const double> values);
// Unbiased (n - 1) variance.
double sample_variance(std::span<const double> values);

// P(X <= r) for X ~ Binomial(k, 1/2).
double binomial_half_cdf(int r, int k);

} // namespace medmeta
