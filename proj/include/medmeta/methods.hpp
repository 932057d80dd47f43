#pragma once

#include "medmeta/abc.hpp"
#include "medmeta/median_methods.hpp"
#include "medmeta/pooling.hpp"
#include "medmeta/summary.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace medmeta {

enum class Method { Wan, Luo, Mdm, MdmN, Qe, QeBc, AbcSds, AbcBma };

// Lowercase tokens: wan, luo, mdm, mdm-n, qe, qe-bc, abc-sds, abc-bma.
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view token);
// Comma-separated list; duplicates are rejected.
std::vector<Method> parse_method_list(std::string_view list);

// True for the difference-of-means estimators.
bool targets_means(Method m) noexcept;

using DensityTable = std::map<std::string, std::pair<double, double>, std::less<>>;

// Reads a `study_id,f1,f2` sidecar of true densities at the medians.
DensityTable parse_density_csv(std::string_view text);

struct MethodContext {
    PoolModel model = PoolModel::RandomEffects;
    QEConfig qe{};
    AbcConfig abc{};
    const DensityTable* densities = nullptr;
};

struct MethodOutcome {
    Method method = Method::Wan;
    // Per-study effects; the MDM methods leave the variance as NaN.
    std::vector<EffectEstimate> effects;
    double pooled = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<PoolResult> pool;
    std::optional<MdmResult> mdm;
};

std::vector<EffectEstimate> study_effects(const MetaDataset& data, Method m,
                                          const MethodContext& ctx);

MethodOutcome run_method(const MetaDataset& data, Method m, const MethodContext& ctx);

} // namespace medmeta
