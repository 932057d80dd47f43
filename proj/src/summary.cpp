#include "medmeta/summary.hpp"

#include "medmeta/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace medmeta {

std::string_view to_string(Scenario s) noexcept {
    switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
    case Scenario::MeanSd: return "MEAN_SD";
    }
    return "?";
}

void validate(const GroupSummary& g) {
    if (g.n < 2) {
        throw Error(ErrorCode::ParseError, "sample size must be at least 2");
    }
    const std::array<const std::optional<double>*, 5> quantiles{&g.min, &g.q1, &g.median, &g.q3,
                                                                &g.max};
    std::optional<double> previous;
    for (const auto* q : quantiles) {
        if (!q->has_value()) continue;
        if (!std::isfinite(**q)) {
            throw Error(ErrorCode::ParseError, "non-finite quantile");
        }
        if (previous && **q < *previous) {
            throw Error(ErrorCode::ParseError,
                        "quantiles must satisfy min <= q1 <= median <= q3 <= max");
        }
        previous = **q;
    }
    if (g.sd && !g.mean) {
        throw Error(ErrorCode::ParseError, "sd reported without mean");
    }
    if (g.sd && (!std::isfinite(*g.sd) || *g.sd < 0.0)) {
        throw Error(ErrorCode::ParseError, "sd must be a nonnegative real");
    }
    if (g.mean && !std::isfinite(*g.mean)) {
        throw Error(ErrorCode::ParseError, "non-finite mean");
    }
}

Scenario classify_scenario(const GroupSummary& g) {
    const bool extremes = g.min && g.max;
    const bool any_extreme = g.min || g.max;
    const bool quartiles = g.q1 && g.q3;
    const bool any_quartile = g.q1 || g.q3;
    const bool moments = g.mean && g.sd;
    const bool any_moment = g.mean || g.sd;
    const bool any_quantile = any_extreme || any_quartile || g.median;

    if (moments && !any_quantile) return Scenario::MeanSd;
    if (g.median && !any_moment) {
        if (extremes && quartiles) return Scenario::S3;
        if (extremes && !any_quartile) return Scenario::S1;
        if (quartiles && !any_extreme) return Scenario::S2;
    }
    throw Error(ErrorCode::AmbiguousSummary,
                "reported fields match none of S1, S2, S3 or mean/sd");
}

Scenario classify_study(const StudyRecord& s) {
    const Scenario a = classify_scenario(s.group1);
    const Scenario b = classify_scenario(s.group2);
    if (a != b) {
        throw Error(ErrorCode::AmbiguousSummary,
                    "study '" + s.id + "' reports different summary sets in its two groups");
    }
    return a;
}

namespace {

constexpr std::array<std::string_view, 10> kHeader{"study_id", "group", "n",  "min",  "q1",
                                                   "median",   "q3",    "max", "mean", "sd"};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void fail_row(std::size_t row, const std::string& what) {
    throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": " + what);
}

std::optional<double> parse_real(std::string_view field, std::size_t row, std::string_view name) {
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        fail_row(row, "malformed number in column '" + std::string(name) + "': '" +
                          std::string(field) + "'");
    }
    return value;
}

} // namespace

MetaDataset parse_csv(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }

    std::size_t header_row = 0;
    while (header_row < lines.size() && trim(lines[header_row]).empty()) ++header_row;
    if (header_row == lines.size()) {
        throw Error(ErrorCode::ParseError, "empty input: header row required");
    }
    const auto header = split_fields(lines[header_row]);
    if (header.size() != kHeader.size() ||
        !std::equal(header.begin(), header.end(), kHeader.begin())) {
        throw Error(ErrorCode::ParseError,
                    "row 1: header must be study_id,group,n,min,q1,median,q3,max,mean,sd");
    }

    struct Pending {
        std::optional<GroupSummary> g1;
        std::optional<GroupSummary> g2;
        std::size_t first_row = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, Pending> by_id;

    for (std::size_t i = header_row + 1; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != kHeader.size()) {
            fail_row(row, "expected 10 fields, found " + std::to_string(fields.size()));
        }
        const std::string id(fields[0]);
        if (id.empty()) fail_row(row, "empty study_id");
        if (fields[1] != "1" && fields[1] != "2") fail_row(row, "group must be 1 or 2");

        GroupSummary g;
        {
            int n = 0;
            const auto f = fields[2];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), n);
            if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
                fail_row(row, "malformed sample size '" + std::string(f) + "'");
            }
            g.n = n;
        }
        g.min = parse_real(fields[3], row, kHeader[3]);
        g.q1 = parse_real(fields[4], row, kHeader[4]);
        g.median = parse_real(fields[5], row, kHeader[5]);
        g.q3 = parse_real(fields[6], row, kHeader[6]);
        g.max = parse_real(fields[7], row, kHeader[7]);
        g.mean = parse_real(fields[8], row, kHeader[8]);
        g.sd = parse_real(fields[9], row, kHeader[9]);
        try {
            validate(g);
            classify_scenario(g);
        } catch (const Error& e) {
            fail_row(row, e.what());
        }

        auto [it, inserted] = by_id.try_emplace(id);
        if (inserted) {
            order.push_back(id);
            it->second.first_row = row;
        }
        auto& slot = fields[1] == "1" ? it->second.g1 : it->second.g2;
        if (slot) fail_row(row, "duplicate group " + std::string(fields[1]) + " for study " + id);
        slot = g;
    }

    if (order.empty()) throw Error(ErrorCode::ParseError, "no data rows");

    MetaDataset out;
    out.studies.reserve(order.size());
    for (const auto& id : order) {
        const auto& p = by_id.at(id);
        if (!p.g1 || !p.g2) {
            fail_row(p.first_row, "study " + id + " is missing group " + (p.g1 ? "2" : "1"));
        }
        StudyRecord rec{id, *p.g1, *p.g2};
        try {
            classify_study(rec);
        } catch (const Error& e) {
            fail_row(p.first_row, e.what());
        }
        out.studies.push_back(std::move(rec));
    }
    return out;
}

MetaDataset read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

namespace {

void put(std::ostringstream& os, const std::optional<double>& v) {
    os << ',';
    if (v) {
        std::array<char, 32> buf{};
        const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), *v);
        os.write(buf.data(), ptr - buf.data());
    }
}

} // namespace

std::string serialize_csv(const MetaDataset& data) {
    std::ostringstream os;
    os << "study_id,group,n,min,q1,median,q3,max,mean,sd\n";
    for (const auto& s : data.studies) {
        for (int group = 1; group <= 2; ++group) {
            const auto& g = group == 1 ? s.group1 : s.group2;
            os << s.id << ',' << group << ',' << g.n;
            put(os, g.min);
            put(os, g.q1);
            put(os, g.median);
            put(os, g.q3);
            put(os, g.max);
            put(os, g.mean);
            put(os, g.sd);
            os << '\n';
        }
    }
    return os.str();
}

double bowley_skewness(const GroupSummary& g) {
    if (!g.q1 || !g.median || !g.q3) {
        throw Error(ErrorCode::MissingQuartiles, "Bowley skewness needs q1, median and q3");
    }
    const double iqr = *g.q3 - *g.q1;
    if (!(iqr > 0.0)) throw Error(ErrorCode::ZeroIQR, "Bowley skewness undefined for q3 == q1");
    return (*g.q3 + *g.q1 - 2.0 * *g.median) / iqr;
}

} // namespace medmeta
