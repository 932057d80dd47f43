#pragma once

#include "medmeta/distributions.hpp"
#include "medmeta/error.hpp"
#include "medmeta/summary.hpp"
#include "medmeta/transform.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace medmeta {

// ---------------------------------------------------------------------------
// Median of the difference of medians
// ---------------------------------------------------------------------------

struct MdmResult {
    double pooled = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double attained_coverage = 0.0;
    // One-based positions in the sorted effects; fractional for the
    // interpolated normal-approximation interval.
    double lower_rank = 0.0;
    double upper_rank = 0.0;
    // False when k < 6: no order-statistic pair reaches 95%, so the interval
    // falls back to (min, max) with its lower attained coverage.
    bool nominal = true;
};

// Sample median of the study effects with the sign-test interval
// (y_(r), y_(k+1-r)), r the largest integer with 2 P(Bin(k, 1/2) <= r-1) <= 0.05.
MdmResult mdm(std::span<const double> effects);

// Interval from the empirical quantiles at 1/2 -+ min(1/2, z_0.975 / (2 sqrt k)).
MdmResult mdm_normal_approx(std::span<const double> effects);

// y1 - y2 from reported medians; studies reporting mean/sd contribute the
// difference of means.
double difference_of_centers(const StudyRecord& s);

// ---------------------------------------------------------------------------
// Quantile estimation
// ---------------------------------------------------------------------------

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

// Box constraints for the least-squares fit. Location bounds of the normal
// and log-normal fits come from the data: (min, max) in S1 and (q1, q3) in
// S2/S3, log-transformed for the log-normal.
struct ConstraintTable {
    Interval normal_sigma{1e-3, 50.0};
    Interval lognormal_sigma{1e-3, 10.0};
    Interval gamma_shape{1e-3, 40.0};
    Interval gamma_rate{1e-3, 40.0};
    Interval weibull_scale{1e-3, 50.0};
    Interval weibull_shape{1e-3, 50.0};
};

struct QEConfig {
    std::vector<Family> candidate_families{Family::Normal, Family::LogNormal, Family::Gamma,
                                           Family::Weibull};
    ConstraintTable constraints{};
    double convergence_tol = 1e-8;
    int max_iterations = 500;
    int starts = 5;
    std::uint64_t seed = 20180917;
    double density_cap = 1e6;
};

struct FittedDensity {
    Family family = Family::Normal;
    Params params{};
    double objective = 0.0;
    double density_at_median = 0.0;
    double median = 0.0;
    bool converged = false;
};

// Outcome of fitting one candidate family. `fit` is empty when the family
// was skipped (nonpositive data for a positive family, or a degenerate box).
struct FamilyFit {
    Family family = Family::Normal;
    std::optional<FittedDensity> fit;
    std::optional<ErrorCode> skipped;
    // Converged, finite objective and a density at the median within the cap.
    bool usable = false;
};

// Sum of squared differences between the family's theoretical quantiles and
// the reported ones at probabilities 1/n, 0.25, 0.5, 0.75, 1 - 1/n (those
// present in the scenario).
double sp_objective(const GroupSummary& g, Family family, Params params);

std::vector<FamilyFit> qe_fit_candidates(const GroupSummary& g, const QEConfig& cfg = {});

// Best usable candidate; ties within 1e-10 resolve to the earlier family in
// Normal, LogNormal, Gamma, Weibull order.
FittedDensity qe_fit(const GroupSummary& g, const QEConfig& cfg = {});

// 1/4 (1/(n1 f1^2) + 1/(n2 f2^2)): asymptotic variance of a difference of
// sample medians given the densities at the population medians.
double var_diff_medians(double f1, double f2, double n1, double n2);
double var_diff_medians(const FittedDensity& fit1, const FittedDensity& fit2, double n1,
                        double n2);

// Location-shift variant: one pooled density (n1 f1 + n2 f2)/(n1 + n2).
double var_diff_medians_shift(double f1, double f2, double n1, double n2);

// Density at the median for a group: the QE fit for quantile summaries, or
// the normal with mu = mean and sigma^2 = (n-1)/n sd^2 for mean/sd groups.
double estimated_density_at_median(const GroupSummary& g, const QEConfig& cfg = {});

EffectEstimate qe_effect(const StudyRecord& s, const QEConfig& cfg = {});
EffectEstimate qe_effect_shift(const StudyRecord& s, const QEConfig& cfg = {});

// QE with the true densities at the medians supplied by the caller.
EffectEstimate qe_bc_effect(const StudyRecord& s, std::pair<double, double> true_densities);

} // namespace medmeta
