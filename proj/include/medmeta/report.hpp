#pragma once

#include "medmeta/methods.hpp"
#include "medmeta/sim_lab.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medmeta {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.1.0";

struct MethodError {
    std::string code;
    std::string message;
};

struct MethodReport {
    Method method = Method::Wan;
    std::optional<MethodOutcome> outcome;
    std::optional<MethodError> error;
};

struct AnalysisReport {
    std::string tool_version{kToolVersion};
    std::string fingerprint;
    PoolModel model = PoolModel::RandomEffects;
    std::vector<std::string> study_ids;
    std::vector<MethodReport> methods;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Hex FNV-1a hash of the canonical CSV serialization.
std::string dataset_fingerprint(const MetaDataset& data);

// Runs every method; a failing method is reported with its error code and
// does not stop the others.
AnalysisReport analyze(const MetaDataset& data, const std::vector<Method>& methods,
                       const MethodContext& ctx);

Json to_json(const AnalysisReport& report);
Json to_json(const SimMetrics& metrics);
Json error_json(std::string_view code, std::string_view message);

// One row per method of the simulation metrics.
std::string metrics_csv(const SimMetrics& metrics);

// JSON text with every number printed to 17 significant digits and
// non-finite numbers as null.
std::string dump_json(const Json& j, int indent = 2);

// Forest plot: study rows from the first successful method that has
// per-study variances (squares with 95% whiskers), one diamond per
// successful method. Throws InvalidConfig when there is nothing to draw.
std::string render_forest_svg(const AnalysisReport& report);
void write_forest_svg(const AnalysisReport& report, const std::string& path);

} // namespace medmeta
