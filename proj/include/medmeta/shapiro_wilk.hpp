#pragma once

#include <span>

namespace medmeta {

struct ShapiroWilkResult {
    double w = 1.0;
    double p_value = 1.0;
};

// Shapiro-Wilk W with Royston's approximations for the coefficients and the
// p-value (algorithm AS R94). Requires 3 <= n <= 5000 and a nonzero range.
ShapiroWilkResult shapiro_wilk(std::span<const double> sample);

} // namespace medmeta
