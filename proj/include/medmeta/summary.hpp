#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medmeta {

// Reported statistics for one arm of a two-group study. Any subset of the
// optional fields may be present; classify_scenario() decides which
// reporting pattern it matches.
struct GroupSummary {
    int n = 0;
    std::optional<double> min;
    std::optional<double> q1;
    std::optional<double> median;
    std::optional<double> q3;
    std::optional<double> max;
    std::optional<double> mean;
    std::optional<double> sd;

    bool operator==(const GroupSummary&) const = default;
};

// S1: {min, median, max}; S2: {q1, median, q3}; S3: all five quantiles;
// MeanSd: {mean, sd}. Every scenario also carries n.
enum class Scenario { S1, S2, S3, MeanSd };

std::string_view to_string(Scenario s) noexcept;

struct StudyRecord {
    std::string id;
    GroupSummary group1;
    GroupSummary group2;

    bool operator==(const StudyRecord&) const = default;
};

struct MetaDataset {
    std::vector<StudyRecord> studies;

    bool operator==(const MetaDataset&) const = default;
};

// Throws Error(ParseError) naming the violated invariant.
void validate(const GroupSummary& g);

Scenario classify_scenario(const GroupSummary& g);

// Checks both arms and that they share one scenario.
Scenario classify_study(const StudyRecord& s);

// Header: study_id,group,n,min,q1,median,q3,max,mean,sd. Missing values are
// empty fields. Rows are paired by (study_id, group); group is "1" or "2".
// Study order follows first appearance.
MetaDataset parse_csv(std::string_view text);
MetaDataset read_csv_file(const std::string& path);

std::string serialize_csv(const MetaDataset& data);

// (q3 + q1 - 2 median) / (q3 - q1)
double bowley_skewness(const GroupSummary& g);

} // namespace medmeta
