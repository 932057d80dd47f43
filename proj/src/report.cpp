#include "medmeta/report.hpp"

#include "medmeta/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace medmeta {

namespace {

Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

Json quartiles_json(const Quartiles& q) {
    Json j;
    j["q1"] = number(q.q1);
    j["median"] = number(q.median);
    j["q3"] = number(q.q3);
    return j;
}

Json effect_json(const EffectEstimate& e) {
    Json j;
    j["study_id"] = e.study_id;
    j["effect"] = number(e.effect);
    j["kind"] = e.kind == EffectKind::DiffMeans ? "difference_of_means" : "difference_of_medians";
    if (std::isfinite(e.variance)) {
        const double half = kZ975 * std::sqrt(e.variance);
        j["variance"] = e.variance;
        j["ci_low"] = number(e.effect - half);
        j["ci_high"] = number(e.effect + half);
    } else {
        j["variance"] = nullptr;
        j["ci_low"] = nullptr;
        j["ci_high"] = nullptr;
    }
    return j;
}

Json outcome_json(const MethodOutcome& o) {
    Json j;
    Json studies = Json::array();
    for (const auto& e : o.effects) studies.push_back(effect_json(e));
    j["studies"] = std::move(studies);
    Json pooled;
    pooled["estimate"] = number(o.pooled);
    pooled["ci_low"] = number(o.ci_low);
    pooled["ci_high"] = number(o.ci_high);
    if (o.pool) {
        const auto& p = *o.pool;
        pooled["type"] = "inverse_variance";
        pooled["model"] = std::string(to_string(p.model));
        pooled["variance"] = number(p.variance);
        pooled["tau2"] = number(p.tau2);
        pooled["q"] = number(p.q_stat);
        pooled["i2"] = number(p.i2);
        pooled["het_p"] = number(p.het_p);
        Json w = Json::array();
        for (double x : p.weights) w.push_back(number(x));
        pooled["weights"] = std::move(w);
    } else if (o.mdm) {
        const auto& m = *o.mdm;
        pooled["type"] = "median_of_differences";
        pooled["attained_coverage"] = number(m.attained_coverage);
        pooled["lower_rank"] = number(m.lower_rank);
        pooled["upper_rank"] = number(m.upper_rank);
        pooled["nominal"] = m.nominal;
    }
    j["pooled"] = std::move(pooled);
    return j;
}

void write_json(std::ostringstream& os, const Json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* colon = indent > 0 ? ": " : ":";
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad << Json(it.key()).dump() << colon;
            write_json(os, it.value(), indent, depth + 1);
        }
        os << nl << close_pad << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << '[' << nl;
        bool first = true;
        for (const auto& v : j) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad;
            write_json(os, v, indent, depth + 1);
        }
        os << nl << close_pad << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            os << "null";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
        return;
    }
    default: os << j.dump(); return;
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string dataset_fingerprint(const MetaDataset& data) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_csv(data))));
    return buf;
}

AnalysisReport analyze(const MetaDataset& data, const std::vector<Method>& methods,
                       const MethodContext& ctx) {
    if (methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods requested");
    AnalysisReport r;
    r.fingerprint = dataset_fingerprint(data);
    r.model = ctx.model;
    for (const auto& s : data.studies) r.study_ids.push_back(s.id);
    for (Method m : methods) {
        MethodReport mr;
        mr.method = m;
        try {
            mr.outcome = run_method(data, m, ctx);
        } catch (const Error& e) {
            mr.error = MethodError{std::string(to_string(e.code())), e.what()};
        }
        r.methods.push_back(std::move(mr));
    }
    return r;
}

Json error_json(std::string_view code, std::string_view message) {
    Json j;
    Json e;
    e["code"] = std::string(code);
    e["message"] = std::string(message);
    j["error"] = std::move(e);
    return j;
}

Json to_json(const AnalysisReport& report) {
    Json j;
    j["tool"] = "median-meta";
    j["tool_version"] = report.tool_version;
    j["dataset_fingerprint"] = report.fingerprint;
    j["model"] = std::string(to_string(report.model));
    j["study_ids"] = report.study_ids;
    Json methods = Json::array();
    for (const auto& m : report.methods) {
        Json mj;
        mj["method"] = std::string(to_string(m.method));
        if (m.outcome) {
            mj["status"] = "ok";
            const Json body = outcome_json(*m.outcome);
            for (auto it = body.begin(); it != body.end(); ++it) mj[it.key()] = it.value();
        } else {
            mj["status"] = "error";
            mj["error"] = {{"code", m.error->code}, {"message", m.error->message}};
        }
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j;
}

Json to_json(const SimMetrics& metrics) {
    const auto& c = metrics.config;
    Json j;
    j["tool"] = "median-meta";
    j["tool_version"] = std::string(kToolVersion);
    Json cfg;
    cfg["studies"] = c.n_studies;
    cfg["median_n"] = c.median_n;
    cfg["outcome"] = std::string(to_string(c.outcome));
    cfg["het"] = std::string(to_string(c.heterogeneity));
    cfg["reporting"] = std::string(to_string(c.reporting));
    cfg["reps"] = c.replications;
    cfg["seed"] = c.seed;
    cfg["model"] = std::string(to_string(c.model));
    cfg["abc_iterations"] = c.abc.iterations_per_family;
    cfg["abc_rate"] = c.abc.acceptance_rate;
    j["config"] = std::move(cfg);
    j["effect_size"] = effect_size(c);
    j["tau2"] = metrics.tau2;
    Json methods = Json::array();
    for (const auto& m : metrics.methods) {
        Json mj;
        mj["method"] = std::string(to_string(m.method));
        mj["target"] = m.target;
        mj["error_scale"] = m.bias_scale ? "bias" : "relative_percent";
        mj["relative_error"] = quartiles_json(m.relative_error);
        mj["variance_of_estimates"] = number(m.variance_of_estimates);
        mj["coverage"] = number(m.coverage);
        mj["mean_ci_length"] = number(m.mean_ci_length);
        mj["tau2_bias"] = m.tau2_bias ? quartiles_json(*m.tau2_bias) : Json(nullptr);
        mj["successes"] = m.successes;
        mj["failures"] = m.failures;
        Json codes = Json::object();
        for (const auto& [code, count] : m.failure_codes) codes[code] = count;
        mj["failure_codes"] = std::move(codes);
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j;
}

std::string metrics_csv(const SimMetrics& metrics) {
    const auto& c = metrics.config;
    auto num = [](double v) {
        if (!std::isfinite(v)) return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "method,studies,median_n,outcome,het,reporting,model,reps,target,error_scale,"
          "re_q1,re_median,re_q3,variance,coverage,mean_ci_length,tau2_bias_q1,"
          "tau2_bias_median,tau2_bias_q3,failures\n";
    for (const auto& m : metrics.methods) {
        const Quartiles t = m.tau2_bias.value_or(Quartiles{std::nan(""), std::nan(""), std::nan("")});
        os << to_string(m.method) << ',' << c.n_studies << ',' << c.median_n << ','
           << to_string(c.outcome) << ',' << to_string(c.heterogeneity) << ','
           << to_string(c.reporting) << ',' << to_string(c.model) << ',' << c.replications << ','
           << num(m.target) << ',' << (m.bias_scale ? "bias" : "relative_percent") << ','
           << num(m.relative_error.q1) << ',' << num(m.relative_error.median) << ','
           << num(m.relative_error.q3) << ',' << num(m.variance_of_estimates) << ','
           << num(m.coverage) << ',' << num(m.mean_ci_length) << ',' << num(t.q1) << ','
           << num(t.median) << ',' << num(t.q3) << ',' << m.failures << '\n';
    }
    return os.str();
}

std::string dump_json(const Json& j, int indent) {
    std::ostringstream os;
    write_json(os, j, indent, 0);
    return os.str();
}

std::string render_forest_svg(const AnalysisReport& report) {
    const MethodOutcome* rows = nullptr;
    std::vector<const MethodOutcome*> pooled;
    for (const auto& m : report.methods) {
        if (!m.outcome) continue;
        pooled.push_back(&*m.outcome);
        if (!rows && m.outcome->pool) rows = &*m.outcome;
    }
    if (pooled.empty()) throw Error(ErrorCode::InvalidConfig, "forest plot needs a successful method");
    if (!rows) rows = pooled.front();

    struct Row {
        std::string label;
        double est, lo, hi;
        bool has_ci;
    };
    std::vector<Row> study_rows;
    for (const auto& e : rows->effects) {
        const bool has_ci = std::isfinite(e.variance);
        const double half = has_ci ? kZ975 * std::sqrt(e.variance) : 0.0;
        study_rows.push_back({e.study_id, e.effect, e.effect - half, e.effect + half, has_ci});
    }
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& r : study_rows) {
        lo = std::min(lo, r.lo);
        hi = std::max(hi, r.hi);
    }
    for (const auto* p : pooled) {
        if (std::isfinite(p->ci_low)) lo = std::min(lo, p->ci_low);
        if (std::isfinite(p->ci_high)) hi = std::max(hi, p->ci_high);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double left = 160.0;
    const double plot_w = 440.0;
    const double row_h = 24.0;
    const double top = 40.0;
    const std::size_t n_rows = study_rows.size() + pooled.size();
    const double height = top + row_h * static_cast<double>(n_rows + 1) + 30.0;
    const double width = left + plot_w + 40.0;
    auto x_of = [&](double v) { return left + plot_w * (v - lo) / (hi - lo); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
       << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"" << fmt(left) << "\" y=\"20\">Forest plot (" << to_string(rows->method)
       << ", " << to_string(report.model) << ")</text>\n";
    const double axis_y = top + row_h * static_cast<double>(n_rows);
    os << "<line class=\"zero\" x1=\"" << fmt(x_of(0.0)) << "\" y1=\"" << fmt(top - 10.0)
       << "\" x2=\"" << fmt(x_of(0.0)) << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#999\"/>\n";
    double y = top;
    for (const auto& r : study_rows) {
        os << "<g class=\"study\">";
        os << "<text x=\"10\" y=\"" << fmt(y + 4.0) << "\">" << xml_escape(r.label) << "</text>";
        if (r.has_ci) {
            os << "<line x1=\"" << fmt(x_of(r.lo)) << "\" y1=\"" << fmt(y) << "\" x2=\""
               << fmt(x_of(r.hi)) << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>";
        }
        os << "<rect x=\"" << fmt(x_of(r.est) - 4.0) << "\" y=\"" << fmt(y - 4.0)
           << "\" width=\"8\" height=\"8\" fill=\"black\"/>";
        os << "</g>\n";
        y += row_h;
    }
    for (const auto* p : pooled) {
        const double l = std::isfinite(p->ci_low) ? p->ci_low : p->pooled;
        const double h = std::isfinite(p->ci_high) ? p->ci_high : p->pooled;
        os << "<g class=\"pooled\">";
        os << "<text x=\"10\" y=\"" << fmt(y + 4.0) << "\">" << to_string(p->method)
           << " pooled</text>";
        os << "<polygon class=\"diamond\" points=\"" << fmt(x_of(l)) << ',' << fmt(y) << ' '
           << fmt(x_of(p->pooled)) << ',' << fmt(y - 6.0) << ' ' << fmt(x_of(h)) << ','
           << fmt(y) << ' ' << fmt(x_of(p->pooled)) << ',' << fmt(y + 6.0)
           << "\" fill=\"#444\"/>";
        os << "</g>\n";
        y += row_h;
    }
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(axis_y) << "\" x2=\""
       << fmt(left + plot_w) << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        os << "<text x=\"" << fmt(x_of(v)) << "\" y=\"" << fmt(axis_y + 16.0)
           << "\" text-anchor=\"middle\">" << fmt(v) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_forest_svg(const AnalysisReport& report, const std::string& path) {
    const std::string svg = render_forest_svg(report);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << svg;
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

} // namespace medmeta
