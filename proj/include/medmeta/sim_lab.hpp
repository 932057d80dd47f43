#pragma once

#include "medmeta/distributions.hpp"
#include "medmeta/methods.hpp"
#include "medmeta/summary.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace medmeta {

enum class Outcome { NormalNull, NormalModerate, Mixture };
enum class Heterogeneity { None, I25, I75 };
enum class Reporting { S1, S2, S3, MixShapiroWilk, MixRandom25, AllMeans };

// Tokens: null, moderate, mixture; none, i25, i75; s1, s2, s3, mix-sw,
// mix-random25, means.
std::string_view to_string(Outcome o) noexcept;
std::string_view to_string(Heterogeneity h) noexcept;
std::string_view to_string(Reporting r) noexcept;
Outcome parse_outcome(std::string_view token);
Heterogeneity parse_heterogeneity(std::string_view token);
Reporting parse_reporting(std::string_view token);

struct SimConfig {
    int n_studies = 10;
    int median_n = 50;
    Outcome outcome = Outcome::NormalModerate;
    Heterogeneity heterogeneity = Heterogeneity::I25;
    Reporting reporting = Reporting::S1;
    int replications = 500;
    std::uint64_t seed = 20180917;
    PoolModel model = PoolModel::RandomEffects;
    QEConfig qe{};
    AbcConfig abc{};
};

// Throws InvalidConfig.
void validate(const SimConfig& cfg);

// Applies `key = value` lines (blank lines and # comments ignored) on top of
// `base`. Keys: studies, median_n, outcome, het, reporting, reps, seed,
// model, methods, abc_iterations, abc_rate.
struct SimRequest {
    SimConfig config{};
    std::vector<Method> methods{Method::Wan, Method::Luo, Method::Mdm, Method::Qe};
};
SimRequest parse_sim_request(std::string_view text, SimRequest base = {});

// Design constants derived from the configuration.
double effect_size(const SimConfig& cfg);       // c; 0 unless NormalModerate
double injected_tau2(const SimConfig& cfg);     // tau^2 of the heterogeneity draw
std::pair<int, int> sample_size_range(int median_n);

// Population targets: group 1 minus group 2 on the mean and median scales.
double true_mean_difference(const SimConfig& cfg);
double true_median_difference(const SimConfig& cfg);
// Densities of group 1 and group 2 at their medians.
std::pair<double, double> true_densities(const SimConfig& cfg);

struct StudySamples {
    std::vector<double> group1;
    std::vector<double> group2;
    double shift = 0.0;  // heterogeneity d added to group 1
};

int draw_sample_size(int median_n, Rng& rng);

std::vector<StudySamples> generate_meta(const SimConfig& cfg, int replication);

// Reported summaries from raw samples. `rng` drives the MixRandom25 choice.
StudyRecord summarize_samples(const StudySamples& samples, Reporting reporting, Rng& rng,
                              std::string id = "study");

MetaDataset summarize_meta(const std::vector<StudySamples>& studies, const SimConfig& cfg,
                           int replication);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

struct MethodMetrics {
    Method method = Method::Wan;
    double target = 0.0;
    // Relative error in percent, or plain bias when the target is 0.
    bool bias_scale = false;
    Quartiles relative_error{};
    double variance_of_estimates = 0.0;
    double coverage = 0.0;
    double mean_ci_length = 0.0;
    // tau2_hat - tau2; absent for the MDM methods.
    std::optional<Quartiles> tau2_bias;
    int successes = 0;
    int failures = 0;
    std::map<std::string, int> failure_codes;
    // Pooled estimate per replication (NaN where the method failed).
    std::vector<double> estimates;
};

struct SimMetrics {
    SimConfig config{};
    double tau2 = 0.0;
    std::vector<MethodMetrics> methods;
};

using ProgressFn = std::function<void(int done, int total)>;

// Thread count from MEDIAN_META_THREADS, capped by the hardware.
unsigned default_threads();

SimMetrics run_simulation(const SimConfig& cfg, const std::vector<Method>& methods,
                          const ProgressFn& progress = {}, unsigned threads = 0);

} // namespace medmeta
