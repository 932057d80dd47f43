#include "medmeta/shapiro_wilk.hpp"

#include "medmeta/distributions.hpp"
#include "medmeta/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace medmeta {

namespace {

template <std::size_t N>
double poly(const double (&c)[N], double x) {
    double r = 0.0;
    for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
    return r;
}

constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
constexpr double g[] = {-2.273, 0.459};

// Coefficients a_1..a_{n/2} for the upper-minus-lower differences.
std::vector<double> coefficients(std::size_t n) {
    const std::size_t half = n / 2;
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
        return a;
    }
    const double an25 = static_cast<double>(n) + 0.25;
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / an25);
        summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first = 1;
    double fac = 0.0;
    if (n > 5) {
        const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
        fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                        (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
        a[1] = a2;
        first = 2;
    } else {
        fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    return a;
}

} // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3) throw Error(ErrorCode::SampleTooSmall, "Shapiro-Wilk needs at least 3 values");
    if (n > 5000) throw Error(ErrorCode::SampleTooLarge, "Shapiro-Wilk supports at most 5000 values");

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (!(x.back() - x.front() > 0.0)) {
        throw Error(ErrorCode::DomainError, "Shapiro-Wilk needs a sample with nonzero range");
    }

    const auto a = coefficients(n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ssq = 0.0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num += a[i] * (x[n - 1 - i] - x[i]);

    ShapiroWilkResult r;
    r.w = std::min(1.0, num * num / ssq);

    if (n == 3) {
        constexpr double pi6 = 6.0 / std::numbers::pi;
        constexpr double stqr = std::numbers::pi / 3.0;
        r.p_value = std::clamp(pi6 * (std::asin(std::sqrt(r.w)) - stqr), 0.0, 1.0);
        return r;
    }

    const double dn = static_cast<double>(n);
    double y = std::log1p(-r.w);
    double mu = 0.0;
    double sigma = 1.0;
    if (n <= 11) {
        const double gamma = poly(g, dn);
        if (y >= gamma) {
            r.p_value = 0.0;
            return r;
        }
        y = -std::log(gamma - y);
        mu = poly(c3, dn);
        sigma = std::exp(poly(c4, dn));
    } else {
        const double ln = std::log(dn);
        mu = poly(c5, ln);
        sigma = std::exp(poly(c6, ln));
    }
    r.p_value = normal_cdf((mu - y) / sigma);
    return r;
}

} // namespace medmeta
