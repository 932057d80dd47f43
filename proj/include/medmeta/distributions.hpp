#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace medmeta {

using Rng = std::mt19937_64;

enum class Family { Normal, LogNormal, Gamma, Weibull, NormalMixture };

std::string_view to_string(Family f) noexcept;

// Two-parameter families:
//   Normal, LogNormal: (mu, sigma)
//   Gamma:             (alpha shape, beta rate), mean alpha / beta
//   Weibull:           (lambda scale, k shape), cdf 1 - exp(-(x / lambda)^k)
struct Params {
    double theta1 = 0.0;
    double theta2 = 1.0;

    bool operator==(const Params&) const = default;
};

struct MixtureComponent {
    double weight = 1.0;
    double mean = 0.0;
    double sd = 1.0;
};

// Immutable, validated distribution value. Weights of a normal mixture are
// normalized on construction.
class Distribution {
public:
    static Distribution make(Family family, Params params);
    static Distribution normal(double mu, double sigma) { return make(Family::Normal, {mu, sigma}); }
    static Distribution lognormal(double mu, double sigma) {
        return make(Family::LogNormal, {mu, sigma});
    }
    static Distribution gamma(double shape, double rate) { return make(Family::Gamma, {shape, rate}); }
    static Distribution weibull(double scale, double shape) {
        return make(Family::Weibull, {scale, shape});
    }
    static Distribution mixture(std::vector<MixtureComponent> components);

    Family family() const noexcept { return family_; }
    const Params& params() const noexcept { return params_; }
    std::span<const MixtureComponent> components() const noexcept { return components_; }

    double pdf(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;
    double median() const { return quantile(0.5); }
    double mean() const;
    double variance() const;

    double draw(Rng& rng) const;
    std::vector<double> sample(std::size_t n, Rng& rng) const;

private:
    Distribution() = default;

    Family family_ = Family::Normal;
    Params params_{};
    std::vector<MixtureComponent> components_;
};

// The skewed four-component outcome used for group 1 in the simulation:
// weights (2/5, 1/6, 1/6, 1/6) normalized, means (36.5, 40.5, 44.5, 49.5),
// sds (2.8, 3.6, 6, 11).
Distribution simulation_mixture();

// Free-function forms over a two-parameter family. Throw InvalidParams for
// invalid parameters; quantile() throws DomainError for p outside (0, 1).
double pdf(Family family, Params params, double x);
double cdf(Family family, Params params, double x);
double quantile(Family family, Params params, double p);
double median_of(Family family, Params params);
std::vector<double> sample(Family family, Params params, std::size_t n, Rng& rng);

bool params_valid(Family family, Params params) noexcept;

// Unchecked evaluations for hot loops; callers guarantee valid parameters
// and p in (0, 1).
double quantile_unchecked(Family family, Params params, double p);
double pdf_unchecked(Family family, Params params, double x);

// Standard normal helpers.
double normal_cdf(double z);
double normal_quantile(double p);

// Regularized incomplete gamma functions.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of the chi-squared distribution; df == 0 yields 1.
double chi2_sf(double x, double df);

} // namespace medmeta
