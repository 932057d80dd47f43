#pragma once

#include "medmeta/summary.hpp"

#include <string>

namespace medmeta {

enum class MeanMethod { Wan, Luo };

struct MeanSdEstimate {
    double mean = 0.0;
    double sd = 0.0;
    MeanMethod method = MeanMethod::Wan;
    Scenario scenario = Scenario::S1;
};

enum class EffectKind { DiffMeans, DiffMedians };

// Per-study effect (group 1 minus group 2) and its variance. `method`
// records which estimator produced it ("wan", "qe", ...).
struct EffectEstimate {
    std::string study_id;
    double effect = 0.0;
    double variance = 0.0;
    EffectKind kind = EffectKind::DiffMeans;
    std::string method;
};

// Mean and SD from quantile summaries following the recommendations of Wan
// et al.: Hozo's mean in S1, the normal-theory quartile mean in S2, Bland's
// mean in S3; SDs from expected normal order statistics.
MeanSdEstimate wan_mean_sd(const GroupSummary& g);

// Luo et al.'s optimally weighted mean estimator.
double luo_mean(const GroupSummary& g);

// Luo mean with the Wan SD.
MeanSdEstimate luo_mean_sd(const GroupSummary& g);

// Difference of means with unpooled variance sd1^2/n1 + sd2^2/n2. Groups
// reporting mean/sd are used as reported.
EffectEstimate diff_of_means(const StudyRecord& s, MeanMethod method);

} // namespace medmeta
