#pragma once

#include "medmeta/distributions.hpp"
#include "medmeta/median_methods.hpp"
#include "medmeta/summary.hpp"
#include "medmeta/transform.hpp"

#include <cstdint>
#include <vector>

namespace medmeta {

// Uniform prior upper bounds; lower bounds are 0, and location priors for the
// normal and log-normal come from the data as in the QE box.
struct AbcPriors {
    double normal_sigma_max = 50.0;
    double lognormal_sigma_max = 10.0;
    double gamma_shape_max = 40.0;
    double gamma_rate_max = 40.0;
    double weibull_scale_max = 50.0;
    double weibull_shape_max = 50.0;
};

struct AbcConfig {
    std::vector<Family> families{Family::Normal, Family::LogNormal, Family::Gamma,
                                 Family::Weibull};
    int iterations_per_family = 20000;
    double acceptance_rate = 0.001;
    AbcPriors priors{};
    int update_interval = 1000;
    std::uint64_t seed = 1;
};

void validate(const AbcConfig& cfg);

struct AbcFamilyPosterior {
    Family family = Family::Normal;
    Params posterior_mean{};
    double median = 0.0;
    double density_at_median = 0.0;
    double probability = 0.0;
    std::size_t proposals = 0;
    std::vector<Params> accepted;
};

struct AbcResult {
    std::vector<AbcFamilyPosterior> families;
    Family selected = Family::Normal;
    double f_m_sds = 0.0;
    double f_m_bma = 0.0;
};

// Rejection ABC over the candidate families. Draws a family from the current
// proposal probabilities and parameters from the uniform priors, simulates n
// observations, and scores the simulated summary against the reported one by
// Euclidean distance. Each family keeps its rate * iterations_per_family
// closest draws for the posterior-mean fit; model probabilities are the
// family shares of the overall closest rate * (total iterations) draws.
AbcResult abc_fit(const GroupSummary& g, const AbcConfig& cfg = {});

enum class AbcMode { SDS, BMA };

EffectEstimate abc_effect(const StudyRecord& s, const AbcConfig& cfg, AbcMode mode);

} // namespace medmeta
