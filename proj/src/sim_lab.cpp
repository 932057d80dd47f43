#include "medmeta/sim_lab.hpp"

#include "medmeta/error.hpp"
#include "medmeta/seeding.hpp"
#include "medmeta/shapiro_wilk.hpp"
#include "medmeta/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace medmeta {

namespace {

constexpr double kControlMean = 35.0;
constexpr double kControlSd = 7.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename E, std::size_t N>
E parse_token(std::string_view token, const std::pair<E, std::string_view> (&table)[N],
              std::string_view what) {
    for (const auto& [value, name] : table) {
        if (name == token) return value;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown " + std::string(what) + " '" +
                                              std::string(token) + "'");
}

template <typename E, std::size_t N>
std::string_view token_of(E value, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "unknown";
}

constexpr std::pair<Outcome, std::string_view> kOutcomes[] = {
    {Outcome::NormalNull, "null"}, {Outcome::NormalModerate, "moderate"}, {Outcome::Mixture, "mixture"}};
constexpr std::pair<Heterogeneity, std::string_view> kHets[] = {
    {Heterogeneity::None, "none"}, {Heterogeneity::I25, "i25"}, {Heterogeneity::I75, "i75"}};
constexpr std::pair<Reporting, std::string_view> kReportings[] = {
    {Reporting::S1, "s1"},
    {Reporting::S2, "s2"},
    {Reporting::S3, "s3"},
    {Reporting::MixShapiroWilk, "mix-sw"},
    {Reporting::MixRandom25, "mix-random25"},
    {Reporting::AllMeans, "means"}};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view v, std::string_view key) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::InvalidConfig,
                    "invalid value '" + std::string(v) + "' for " + std::string(key));
    }
    return out;
}

const Distribution& mixture() {
    static const Distribution d = simulation_mixture();
    return d;
}

Quartiles quartiles_of(std::vector<double> v) {
    Quartiles q{kNaN, kNaN, kNaN};
    if (v.empty()) return q;
    std::sort(v.begin(), v.end());
    q.q1 = sorted_quantile(v, 0.25);
    q.median = sorted_quantile(v, 0.5);
    q.q3 = sorted_quantile(v, 0.75);
    return q;
}

GroupSummary quantile_summary(std::vector<double> x, Scenario s) {
    std::sort(x.begin(), x.end());
    GroupSummary g;
    g.n = static_cast<int>(x.size());
    g.median = sorted_quantile(x, 0.5);
    if (s != Scenario::S2) {
        g.min = x.front();
        g.max = x.back();
    }
    if (s != Scenario::S1) {
        g.q1 = sorted_quantile(x, 0.25);
        g.q3 = sorted_quantile(x, 0.75);
    }
    return g;
}

GroupSummary mean_sd_summary(const std::vector<double>& x) {
    GroupSummary g;
    g.n = static_cast<int>(x.size());
    g.mean = sample_mean(x);
    g.sd = std::sqrt(sample_variance(x));
    return g;
}

bool rejects_normality(const std::vector<double>& x) {
    return shapiro_wilk(x).p_value < 0.05;
}

struct MethodRun {
    bool ok = false;
    double pooled = kNaN;
    double ci_low = kNaN;
    double ci_high = kNaN;
    double tau2 = kNaN;
    std::string error;
};

} // namespace

std::string_view to_string(Outcome o) noexcept { return token_of(o, kOutcomes); }
std::string_view to_string(Heterogeneity h) noexcept { return token_of(h, kHets); }
std::string_view to_string(Reporting r) noexcept { return token_of(r, kReportings); }
Outcome parse_outcome(std::string_view t) { return parse_token(t, kOutcomes, "outcome"); }
Heterogeneity parse_heterogeneity(std::string_view t) { return parse_token(t, kHets, "heterogeneity"); }
Reporting parse_reporting(std::string_view t) { return parse_token(t, kReportings, "reporting"); }

void validate(const SimConfig& cfg) {
    if (cfg.n_studies < 1) throw Error(ErrorCode::InvalidConfig, "studies must be at least 1");
    if (cfg.median_n != 50 && cfg.median_n != 250) {
        throw Error(ErrorCode::InvalidConfig, "median_n must be 50 or 250");
    }
    if (cfg.replications < 1) throw Error(ErrorCode::InvalidConfig, "reps must be at least 1");
    validate(cfg.abc);
}

SimRequest parse_sim_request(std::string_view text, SimRequest base) {
    int line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidConfig,
                        "line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto& c = base.config;
        if (key == "studies") c.n_studies = parse_number<int>(value, key);
        else if (key == "median_n") c.median_n = parse_number<int>(value, key);
        else if (key == "outcome") c.outcome = parse_outcome(value);
        else if (key == "het") c.heterogeneity = parse_heterogeneity(value);
        else if (key == "reporting") c.reporting = parse_reporting(value);
        else if (key == "reps") c.replications = parse_number<int>(value, key);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key);
        else if (key == "model") {
            if (value == "fixed") c.model = PoolModel::FixedEffect;
            else if (value == "random") c.model = PoolModel::RandomEffects;
            else throw Error(ErrorCode::InvalidConfig, "model must be fixed or random");
        } else if (key == "methods") base.methods = parse_method_list(value);
        else if (key == "abc_iterations") c.abc.iterations_per_family = parse_number<int>(value, key);
        else if (key == "abc_rate") c.abc.acceptance_rate = parse_number<double>(value, key);
        else {
            throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) +
                                                      ": unknown key '" + std::string(key) + "'");
        }
    }
    return base;
}

double effect_size(const SimConfig& cfg) {
    if (cfg.outcome != Outcome::NormalModerate) return 0.0;
    return (kZ975 + normal_quantile(0.6)) * kControlSd * std::sqrt(2.0 / cfg.median_n);
}

double injected_tau2(const SimConfig& cfg) {
    const double within = 2.0 * kControlSd * kControlSd / cfg.median_n;
    switch (cfg.heterogeneity) {
    case Heterogeneity::None: return 0.0;
    case Heterogeneity::I25: return within / 3.0;
    case Heterogeneity::I75: return 3.0 * within;
    }
    return 0.0;
}

std::pair<int, int> sample_size_range(int median_n) {
    return median_n == 50 ? std::pair{10, 500} : std::pair{50, 2500};
}

double true_mean_difference(const SimConfig& cfg) {
    if (cfg.outcome == Outcome::Mixture) return mixture().mean() - kControlMean;
    return effect_size(cfg);
}

double true_median_difference(const SimConfig& cfg) {
    if (cfg.outcome == Outcome::Mixture) return mixture().median() - kControlMean;
    return effect_size(cfg);
}

std::pair<double, double> true_densities(const SimConfig& cfg) {
    const double f2 = 1.0 / (kControlSd * std::sqrt(2.0 * std::numbers::pi));
    if (cfg.outcome == Outcome::Mixture) return {mixture().pdf(mixture().median()), f2};
    return {f2, f2};
}

int draw_sample_size(int median_n, Rng& rng) {
    const auto [lo, hi] = sample_size_range(median_n);
    std::lognormal_distribution<double> d(std::log(static_cast<double>(median_n)), 1.0);
    while (true) {
        const auto n = std::llround(d(rng));
        if (n >= lo && n <= hi) return static_cast<int>(n);
    }
}

std::vector<StudySamples> generate_meta(const SimConfig& cfg, int replication) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(replication), 0}));
    const double c = effect_size(cfg);
    const double tau = std::sqrt(injected_tau2(cfg));
    std::normal_distribution<double> control(kControlMean, kControlSd);
    std::normal_distribution<double> treated(kControlMean + c, kControlSd);
    std::normal_distribution<double> het(0.0, 1.0);

    std::vector<StudySamples> out(static_cast<std::size_t>(cfg.n_studies));
    for (auto& s : out) {
        const auto n = static_cast<std::size_t>(draw_sample_size(cfg.median_n, rng));
        s.shift = tau > 0.0 ? tau * het(rng) : 0.0;
        s.group1.resize(n);
        s.group2.resize(n);
        for (auto& x : s.group1) {
            x = (cfg.outcome == Outcome::Mixture ? mixture().draw(rng) : treated(rng)) + s.shift;
        }
        for (auto& x : s.group2) x = control(rng);
    }
    return out;
}

StudyRecord summarize_samples(const StudySamples& samples, Reporting reporting, Rng& rng,
                              std::string id) {
    bool medians = false;
    Scenario scenario = Scenario::S2;
    switch (reporting) {
    case Reporting::S1: medians = true; scenario = Scenario::S1; break;
    case Reporting::S2: medians = true; break;
    case Reporting::S3: medians = true; scenario = Scenario::S3; break;
    case Reporting::MixShapiroWilk:
        medians = rejects_normality(samples.group1) || rejects_normality(samples.group2);
        break;
    case Reporting::MixRandom25: medians = std::bernoulli_distribution(0.25)(rng); break;
    case Reporting::AllMeans: break;
    }
    StudyRecord r;
    r.id = std::move(id);
    r.group1 = medians ? quantile_summary(samples.group1, scenario) : mean_sd_summary(samples.group1);
    r.group2 = medians ? quantile_summary(samples.group2, scenario) : mean_sd_summary(samples.group2);
    return r;
}

MetaDataset summarize_meta(const std::vector<StudySamples>& studies, const SimConfig& cfg,
                           int replication) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(replication), 1}));
    MetaDataset data;
    for (std::size_t i = 0; i < studies.size(); ++i) {
        data.studies.push_back(
            summarize_samples(studies[i], cfg.reporting, rng, "s" + std::to_string(i + 1)));
    }
    return data;
}

unsigned default_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MEDIAN_META_THREADS")) {
        unsigned cap = 0;
        const std::string_view v(env);
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), cap);
        if (ec == std::errc() && ptr == v.data() + v.size() && cap > 0) n = std::min(n, cap);
    }
    return n;
}

SimMetrics run_simulation(const SimConfig& cfg, const std::vector<Method>& methods,
                          const ProgressFn& progress, unsigned threads) {
    validate(cfg);
    if (methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods requested");

    const auto reps = static_cast<std::size_t>(cfg.replications);
    const auto [f1, f2] = true_densities(cfg);
    std::vector<std::vector<MethodRun>> runs(reps);

    auto replicate = [&](std::size_t rep) {
        const auto samples = generate_meta(cfg, static_cast<int>(rep));
        const MetaDataset data = summarize_meta(samples, cfg, static_cast<int>(rep));
        DensityTable densities;
        for (const auto& s : data.studies) densities.emplace(s.id, std::pair{f1, f2});
        MethodContext ctx;
        ctx.model = cfg.model;
        ctx.qe = cfg.qe;
        ctx.abc = cfg.abc;
        ctx.abc.seed = derive_seed(cfg.abc.seed, {cfg.seed, rep, 2});
        ctx.densities = &densities;

        auto& out = runs[rep];
        out.resize(methods.size());
        for (std::size_t m = 0; m < methods.size(); ++m) {
            try {
                const auto r = run_method(data, methods[m], ctx);
                out[m].ok = std::isfinite(r.pooled);
                out[m].pooled = r.pooled;
                out[m].ci_low = r.ci_low;
                out[m].ci_high = r.ci_high;
                if (r.pool) out[m].tau2 = dersimonian_laird_tau2(r.effects);
                if (!out[m].ok) out[m].error = "NonFinite";
            } catch (const Error& e) {
                out[m].error = std::string(to_string(e.code()));
            }
        }
    };

    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t done = 0;
    std::exception_ptr failure;
    auto worker = [&] {
        while (true) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= reps) return;
            try {
                replicate(rep);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = reps;
                return;
            }
            std::lock_guard lock(mu);
            ++done;
            if (progress) progress(static_cast<int>(done), static_cast<int>(reps));
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    SimMetrics metrics;
    metrics.config = cfg;
    metrics.tau2 = injected_tau2(cfg);
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodMetrics mm;
        mm.method = methods[m];
        mm.target = targets_means(methods[m]) ? true_mean_difference(cfg)
                                               : true_median_difference(cfg);
        mm.bias_scale = std::abs(mm.target) < 1e-12;
        std::vector<double> errors;
        std::vector<double> pooled;
        std::vector<double> tau2_bias;
        double covered = 0.0;
        double length = 0.0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const auto& r = runs[rep][m];
            mm.estimates.push_back(r.ok ? r.pooled : kNaN);
            if (!r.ok) {
                ++mm.failures;
                ++mm.failure_codes[r.error];
                continue;
            }
            ++mm.successes;
            pooled.push_back(r.pooled);
            errors.push_back(mm.bias_scale ? r.pooled - mm.target
                                           : 100.0 * (r.pooled - mm.target) / mm.target);
            if (r.ci_low <= mm.target && mm.target <= r.ci_high) covered += 1.0;
            length += r.ci_high - r.ci_low;
            if (std::isfinite(r.tau2)) tau2_bias.push_back(r.tau2 - metrics.tau2);
        }
        mm.relative_error = quartiles_of(errors);
        mm.variance_of_estimates = pooled.size() >= 2 ? sample_variance(pooled) : kNaN;
        mm.coverage = mm.successes > 0 ? covered / mm.successes : kNaN;
        mm.mean_ci_length = mm.successes > 0 ? length / mm.successes : kNaN;
        if (!tau2_bias.empty()) mm.tau2_bias = quartiles_of(tau2_bias);
        metrics.methods.push_back(std::move(mm));
    }
    return metrics;
}

} // namespace medmeta
