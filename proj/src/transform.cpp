#include "medmeta/transform.hpp"

#include "medmeta/distributions.hpp"
#include "medmeta/error.hpp"

#include <cmath>

namespace medmeta {

namespace {

Scenario quantile_scenario(const GroupSummary& g) {
    const Scenario s = classify_scenario(g);
    if (s == Scenario::MeanSd) {
        throw Error(ErrorCode::WrongScenario, "mean/sd summaries need no transformation");
    }
    return s;
}

// Denominator terms xi(n) = Phi^-1((n - 0.375)/(n + 0.25)) for the range
// and eta(n) = Phi^-1((0.75 n - 0.125)/(n + 0.25)) for the IQR.
double range_z(double n) { return normal_quantile((n - 0.375) / (n + 0.25)); }
double iqr_z(double n) { return normal_quantile((0.75 * n - 0.125) / (n + 0.25)); }

double wan_sd(const GroupSummary& g, Scenario s) {
    const double n = g.n;
    switch (s) {
    case Scenario::S1: return (*g.max - *g.min) / (2.0 * range_z(n));
    case Scenario::S2: return (*g.q3 - *g.q1) / (2.0 * iqr_z(n));
    case Scenario::S3:
        return (*g.max - *g.min) / (4.0 * range_z(n)) + (*g.q3 - *g.q1) / (4.0 * iqr_z(n));
    case Scenario::MeanSd: break;
    }
    throw Error(ErrorCode::WrongScenario, "unsupported scenario");
}

} // namespace

MeanSdEstimate wan_mean_sd(const GroupSummary& g) {
    const Scenario s = quantile_scenario(g);
    MeanSdEstimate out;
    out.method = MeanMethod::Wan;
    out.scenario = s;
    switch (s) {
    case Scenario::S1:
        out.mean = g.n <= 25 ? (*g.min + 2.0 * *g.median + *g.max) / 4.0 : *g.median;
        break;
    case Scenario::S2: out.mean = (*g.q1 + *g.median + *g.q3) / 3.0; break;
    case Scenario::S3:
        out.mean = (*g.min + 2.0 * *g.q1 + 2.0 * *g.median + 2.0 * *g.q3 + *g.max) / 8.0;
        break;
    case Scenario::MeanSd: break;
    }
    out.sd = wan_sd(g, s);
    return out;
}

double luo_mean(const GroupSummary& g) {
    const Scenario s = quantile_scenario(g);
    const double n = g.n;
    const double y = *g.median;
    switch (s) {
    case Scenario::S1: {
        const double n75 = std::pow(n, 0.75);
        const double w = 4.0 / (4.0 + n75);
        return w * (*g.min + *g.max) / 2.0 + (1.0 - w) * y;
    }
    case Scenario::S2: {
        const double w = 0.7 + 0.39 / n;
        return w * (*g.q1 + *g.q3) / 2.0 + (0.3 - 0.39 / n) * y;
    }
    case Scenario::S3: {
        const double w_range = 2.2 / (2.2 + std::pow(n, 0.75));
        const double w_iqr = 0.7 - 0.72 / std::pow(n, 0.55);
        return w_range * (*g.min + *g.max) / 2.0 + w_iqr * (*g.q1 + *g.q3) / 2.0 +
               (1.0 - w_range - w_iqr) * y;
    }
    case Scenario::MeanSd: break;
    }
    throw Error(ErrorCode::WrongScenario, "unsupported scenario");
}

MeanSdEstimate luo_mean_sd(const GroupSummary& g) {
    MeanSdEstimate out = wan_mean_sd(g);
    out.mean = luo_mean(g);
    out.method = MeanMethod::Luo;
    return out;
}

EffectEstimate diff_of_means(const StudyRecord& s, MeanMethod method) {
    const Scenario scenario = classify_study(s);
    auto estimate = [&](const GroupSummary& g) -> std::pair<double, double> {
        if (scenario == Scenario::MeanSd) return {*g.mean, *g.sd};
        const auto e = method == MeanMethod::Wan ? wan_mean_sd(g) : luo_mean_sd(g);
        return {e.mean, e.sd};
    };
    const auto [m1, sd1] = estimate(s.group1);
    const auto [m2, sd2] = estimate(s.group2);

    EffectEstimate out;
    out.study_id = s.id;
    out.effect = m1 - m2;
    out.variance = sd1 * sd1 / s.group1.n + sd2 * sd2 / s.group2.n;
    out.kind = EffectKind::DiffMeans;
    out.method = method == MeanMethod::Wan ? "wan" : "luo";
    if (!(out.variance > 0.0)) {
        throw Error(ErrorCode::NonPositiveVariance,
                    "study '" + s.id + "' has zero estimated spread in both groups");
    }
    return out;
}

} // namespace medmeta
