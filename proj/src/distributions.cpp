#include "medmeta/distributions.hpp"

#include "medmeta/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace medmeta {

namespace {

namespace bm = boost::math;
using BoostPolicy =
    bm::policies::policy<bm::policies::domain_error<bm::policies::errno_on_error>,
                         bm::policies::pole_error<bm::policies::errno_on_error>,
                         bm::policies::overflow_error<bm::policies::errno_on_error>,
                         bm::policies::evaluation_error<bm::policies::errno_on_error>,
                         bm::policies::underflow_error<bm::policies::ignore_error>,
                         bm::policies::promote_double<false>>;

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_valid(Family family, Params params) {
    if (!params_valid(family, params)) {
        throw Error(ErrorCode::InvalidParams,
                    "invalid parameters for " + std::string(to_string(family)));
    }
}

void require_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::DomainError, "quantile probability must lie in (0, 1)");
    }
}

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

// Density at the origin for shape parameter k of families with x^(k-1)
// behaviour near zero.
double density_at_zero(double shape, double at_one) {
    if (shape < 1.0) return kInf;
    if (shape == 1.0) return at_one;
    return 0.0;
}

} // namespace

std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::Normal: return "normal";
    case Family::LogNormal: return "lognormal";
    case Family::Gamma: return "gamma";
    case Family::Weibull: return "weibull";
    case Family::NormalMixture: return "normal_mixture";
    }
    return "?";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

// Acklam's rational approximation (relative error ~1e-9) polished with one
// Halley step against erfc.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -kInf;
        if (p == 1.0) return kInf;
        return kNaN;
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Work in the tail where the probability is small to avoid cancellation.
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return bm::gamma_p(a, x, BoostPolicy());
}

double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return bm::gamma_q(a, x, BoostPolicy());
}

double chi2_sf(double x, double df) {
    if (df <= 0.0) return 1.0;
    if (!(x > 0.0)) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

bool params_valid(Family family, Params p) noexcept {
    const bool finite = std::isfinite(p.theta1) && std::isfinite(p.theta2);
    if (!finite) return false;
    switch (family) {
    case Family::Normal:
    case Family::LogNormal: return p.theta2 > 0.0;
    case Family::Gamma:
    case Family::Weibull: return p.theta1 > 0.0 && p.theta2 > 0.0;
    case Family::NormalMixture: return false;
    }
    return false;
}

double pdf_unchecked(Family family, Params p, double x) {
    switch (family) {
    case Family::Normal: return normal_pdf(x, p.theta1, p.theta2);
    case Family::LogNormal:
        if (x <= 0.0) return 0.0;
        return normal_pdf(std::log(x), p.theta1, p.theta2) / x;
    case Family::Gamma: {
        const double alpha = p.theta1;
        const double beta = p.theta2;
        if (x < 0.0) return 0.0;
        if (x == 0.0) return density_at_zero(alpha, beta);
        const double log_f = alpha * std::log(beta) + (alpha - 1.0) * std::log(x) - beta * x -
                             std::lgamma(alpha);
        return std::exp(log_f);
    }
    case Family::Weibull: {
        const double lambda = p.theta1;
        const double k = p.theta2;
        if (x < 0.0) return 0.0;
        if (x == 0.0) return density_at_zero(k, 1.0 / lambda);
        const double z = x / lambda;
        return k / lambda * std::pow(z, k - 1.0) * std::exp(-std::pow(z, k));
    }
    case Family::NormalMixture: break;
    }
    return kNaN;
}

double quantile_unchecked(Family family, Params p, double prob) {
    switch (family) {
    case Family::Normal: return p.theta1 + p.theta2 * normal_quantile(prob);
    case Family::LogNormal: return std::exp(p.theta1 + p.theta2 * normal_quantile(prob));
    case Family::Gamma: return bm::gamma_p_inv(p.theta1, prob, BoostPolicy()) / p.theta2;
    case Family::Weibull: return p.theta1 * std::pow(-std::log1p(-prob), 1.0 / p.theta2);
    case Family::NormalMixture: break;
    }
    return kNaN;
}

Distribution Distribution::make(Family family, Params params) {
    if (family == Family::NormalMixture) {
        throw Error(ErrorCode::InvalidParams, "use Distribution::mixture for normal mixtures");
    }
    require_valid(family, params);
    Distribution d;
    d.family_ = family;
    d.params_ = params;
    return d;
}

Distribution Distribution::mixture(std::vector<MixtureComponent> components) {
    if (components.empty()) throw Error(ErrorCode::InvalidParams, "mixture needs components");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0) || !(c.sd > 0.0) || !std::isfinite(c.mean) ||
            !std::isfinite(c.weight) || !std::isfinite(c.sd)) {
            throw Error(ErrorCode::InvalidParams, "mixture weights and sds must be positive");
        }
        total += c.weight;
    }
    for (auto& c : components) c.weight /= total;
    Distribution d;
    d.family_ = Family::NormalMixture;
    d.components_ = std::move(components);
    return d;
}

double Distribution::pdf(double x) const {
    if (family_ != Family::NormalMixture) return pdf_unchecked(family_, params_, x);
    double f = 0.0;
    for (const auto& c : components_) f += c.weight * normal_pdf(x, c.mean, c.sd);
    return f;
}

double Distribution::cdf(double x) const {
    const double t1 = params_.theta1;
    const double t2 = params_.theta2;
    switch (family_) {
    case Family::Normal: return normal_cdf((x - t1) / t2);
    case Family::LogNormal: return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - t1) / t2);
    case Family::Gamma: return x <= 0.0 ? 0.0 : gamma_p(t1, t2 * x);
    case Family::Weibull: return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / t1, t2));
    case Family::NormalMixture: {
        double F = 0.0;
        for (const auto& c : components_) F += c.weight * normal_cdf((x - c.mean) / c.sd);
        return F;
    }
    }
    return kNaN;
}

double Distribution::quantile(double p) const {
    require_probability(p);
    if (family_ != Family::NormalMixture) return quantile_unchecked(family_, params_, p);

    // Bracketed bisection on the cdf to an interval width of 1e-12.
    double lo = kInf;
    double hi = -kInf;
    for (const auto& c : components_) {
        lo = std::min(lo, c.mean - 40.0 * c.sd);
        hi = std::max(hi, c.mean + 40.0 * c.sd);
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double Distribution::mean() const {
    const double t1 = params_.theta1;
    const double t2 = params_.theta2;
    switch (family_) {
    case Family::Normal: return t1;
    case Family::LogNormal: return std::exp(t1 + 0.5 * t2 * t2);
    case Family::Gamma: return t1 / t2;
    case Family::Weibull: return t1 * std::tgamma(1.0 + 1.0 / t2);
    case Family::NormalMixture: {
        double m = 0.0;
        for (const auto& c : components_) m += c.weight * c.mean;
        return m;
    }
    }
    return kNaN;
}

double Distribution::variance() const {
    const double t1 = params_.theta1;
    const double t2 = params_.theta2;
    switch (family_) {
    case Family::Normal: return t2 * t2;
    case Family::LogNormal: return std::expm1(t2 * t2) * std::exp(2.0 * t1 + t2 * t2);
    case Family::Gamma: return t1 / (t2 * t2);
    case Family::Weibull: {
        const double g1 = std::tgamma(1.0 + 1.0 / t2);
        return t1 * t1 * (std::tgamma(1.0 + 2.0 / t2) - g1 * g1);
    }
    case Family::NormalMixture: {
        double second = 0.0;
        for (const auto& c : components_) second += c.weight * (c.sd * c.sd + c.mean * c.mean);
        const double m = mean();
        return second - m * m;
    }
    }
    return kNaN;
}

double Distribution::draw(Rng& rng) const {
    const double t1 = params_.theta1;
    const double t2 = params_.theta2;
    switch (family_) {
    case Family::Normal: return std::normal_distribution<double>(t1, t2)(rng);
    case Family::LogNormal: return std::exp(std::normal_distribution<double>(t1, t2)(rng));
    case Family::Gamma: return std::gamma_distribution<double>(t1, 1.0 / t2)(rng);
    case Family::Weibull: return std::weibull_distribution<double>(t2, t1)(rng);
    case Family::NormalMixture: {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const MixtureComponent* chosen = &components_.back();
        for (const auto& c : components_) {
            if (u < c.weight) {
                chosen = &c;
                break;
            }
            u -= c.weight;
        }
        return std::normal_distribution<double>(chosen->mean, chosen->sd)(rng);
    }
    }
    return kNaN;
}

std::vector<double> Distribution::sample(std::size_t n, Rng& rng) const {
    std::vector<double> out(n);
    switch (family_) {
    case Family::Normal: {
        std::normal_distribution<double> dist(params_.theta1, params_.theta2);
        for (auto& x : out) x = dist(rng);
        break;
    }
    case Family::LogNormal: {
        std::normal_distribution<double> dist(params_.theta1, params_.theta2);
        for (auto& x : out) x = std::exp(dist(rng));
        break;
    }
    case Family::Gamma: {
        std::gamma_distribution<double> dist(params_.theta1, 1.0 / params_.theta2);
        for (auto& x : out) x = dist(rng);
        break;
    }
    case Family::Weibull: {
        std::weibull_distribution<double> dist(params_.theta2, params_.theta1);
        for (auto& x : out) x = dist(rng);
        break;
    }
    case Family::NormalMixture:
        for (auto& x : out) x = draw(rng);
        break;
    }
    return out;
}

Distribution simulation_mixture() {
    return Distribution::mixture({{2.0 / 5.0, 36.5, 2.8},
                                  {1.0 / 6.0, 40.5, 3.6},
                                  {1.0 / 6.0, 44.5, 6.0},
                                  {1.0 / 6.0, 49.5, 11.0}});
}

double pdf(Family family, Params params, double x) {
    return Distribution::make(family, params).pdf(x);
}

double cdf(Family family, Params params, double x) {
    return Distribution::make(family, params).cdf(x);
}

double quantile(Family family, Params params, double p) {
    return Distribution::make(family, params).quantile(p);
}

double median_of(Family family, Params params) {
    return Distribution::make(family, params).median();
}

std::vector<double> sample(Family family, Params params, std::size_t n, Rng& rng) {
    return Distribution::make(family, params).sample(n, rng);
}

} // namespace medmeta
