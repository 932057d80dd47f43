#include "medmeta/methods.hpp"

#include "medmeta/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace medmeta {

namespace {

constexpr std::pair<Method, std::string_view> kTokens[] = {
    {Method::Wan, "wan"},   {Method::Luo, "luo"},     {Method::Mdm, "mdm"},
    {Method::MdmN, "mdm-n"}, {Method::Qe, "qe"},       {Method::QeBc, "qe-bc"},
    {Method::AbcSds, "abc-sds"}, {Method::AbcBma, "abc-bma"},
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_density(std::string_view field, int row) {
    field = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::ParseError,
                    "row " + std::to_string(row) + ": density must be a positive number");
    }
    return v;
}

} // namespace

std::string_view to_string(Method m) noexcept {
    for (const auto& [method, token] : kTokens) {
        if (method == m) return token;
    }
    return "unknown";
}

Method parse_method(std::string_view token) {
    token = trim(token);
    for (const auto& [method, name] : kTokens) {
        if (name == token) return method;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(token) + "'");
}

std::vector<Method> parse_method_list(std::string_view list) {
    std::vector<Method> out;
    for (auto token : split(list, ',')) {
        const Method m = parse_method(token);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw Error(ErrorCode::InvalidConfig,
                        "method '" + std::string(to_string(m)) + "' listed twice");
        }
        out.push_back(m);
    }
    return out;
}

bool targets_means(Method m) noexcept { return m == Method::Wan || m == Method::Luo; }

DensityTable parse_density_csv(std::string_view text) {
    DensityTable out;
    int row = 0;
    for (auto line : split(text, '\n')) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (row == 1) {
            if (fields.size() != 3 || trim(fields[0]) != "study_id" || trim(fields[1]) != "f1" ||
                trim(fields[2]) != "f2") {
                throw Error(ErrorCode::ParseError, "row 1: expected header study_id,f1,f2");
            }
            continue;
        }
        if (fields.size() != 3) {
            throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected 3 fields");
        }
        const std::string id(trim(fields[0]));
        if (!out.emplace(id, std::pair{parse_density(fields[1], row), parse_density(fields[2], row)})
                 .second) {
            throw Error(ErrorCode::ParseError,
                        "row " + std::to_string(row) + ": duplicate study '" + id + "'");
        }
    }
    if (row < 1) throw Error(ErrorCode::ParseError, "empty density file");
    return out;
}

std::vector<EffectEstimate> study_effects(const MetaDataset& data, Method m,
                                          const MethodContext& ctx) {
    std::vector<EffectEstimate> out;
    out.reserve(data.studies.size());
    for (const auto& s : data.studies) {
        switch (m) {
        case Method::Wan: out.push_back(diff_of_means(s, MeanMethod::Wan)); break;
        case Method::Luo: out.push_back(diff_of_means(s, MeanMethod::Luo)); break;
        case Method::Mdm:
        case Method::MdmN: {
            EffectEstimate e;
            e.study_id = s.id;
            e.effect = difference_of_centers(s);
            e.variance = std::numeric_limits<double>::quiet_NaN();
            e.kind = classify_study(s) == Scenario::MeanSd ? EffectKind::DiffMeans
                                                            : EffectKind::DiffMedians;
            e.method = std::string(to_string(m));
            out.push_back(std::move(e));
            break;
        }
        case Method::Qe: out.push_back(qe_effect(s, ctx.qe)); break;
        case Method::QeBc: {
            if (!ctx.densities) {
                throw Error(ErrorCode::InvalidConfig, "qe-bc needs a densities sidecar file");
            }
            const auto it = ctx.densities->find(s.id);
            if (it == ctx.densities->end()) {
                throw Error(ErrorCode::InvalidConfig,
                            "no true densities given for study '" + s.id + "'");
            }
            out.push_back(qe_bc_effect(s, it->second));
            break;
        }
        case Method::AbcSds: out.push_back(abc_effect(s, ctx.abc, AbcMode::SDS)); break;
        case Method::AbcBma: out.push_back(abc_effect(s, ctx.abc, AbcMode::BMA)); break;
        }
    }
    return out;
}

MethodOutcome run_method(const MetaDataset& data, Method m, const MethodContext& ctx) {
    if (data.studies.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no studies");
    MethodOutcome out;
    out.method = m;
    out.effects = study_effects(data, m, ctx);
    if (m == Method::Mdm || m == Method::MdmN) {
        std::vector<double> y;
        y.reserve(out.effects.size());
        for (const auto& e : out.effects) y.push_back(e.effect);
        out.mdm = m == Method::Mdm ? mdm(y) : mdm_normal_approx(y);
        out.pooled = out.mdm->pooled;
        out.ci_low = out.mdm->ci_low;
        out.ci_high = out.mdm->ci_high;
    } else {
        out.pool = pool(out.effects, ctx.model);
        out.pooled = out.pool->pooled;
        out.ci_low = out.pool->ci_low;
        out.ci_high = out.pool->ci_high;
    }
    return out;
}

} // namespace medmeta
