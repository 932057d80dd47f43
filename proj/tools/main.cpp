#include "medmeta/error.hpp"
#include "medmeta/report.hpp"
#include "medmeta/sim_lab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef MEDIAN_META_FIXTURE_DIR
#define MEDIAN_META_FIXTURE_DIR "fixtures"
#endif

using namespace medmeta;

namespace {

constexpr int kExitMethodFailure = 1;
constexpr int kExitInputError = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

PoolModel parse_model(const std::string& s) {
    if (s == "fixed") return PoolModel::FixedEffect;
    if (s == "random") return PoolModel::RandomEffects;
    throw Error(ErrorCode::InvalidConfig, "model must be fixed or random");
}

struct AnalyzeArgs {
    std::string csv;
    std::string methods = "wan,luo,mdm,qe";
    std::string model = "random";
    std::string densities;
    std::string out;
    std::string svg;
    std::uint64_t seed = 20180917;
    int abc_iterations = 20000;
    double abc_rate = 0.001;
};

int run_analyze(const AnalyzeArgs& a) {
    MethodContext ctx;
    ctx.model = parse_model(a.model);
    ctx.abc.seed = a.seed;
    ctx.abc.iterations_per_family = a.abc_iterations;
    ctx.abc.acceptance_rate = a.abc_rate;
    ctx.qe.seed = a.seed;
    const auto methods = parse_method_list(a.methods);
    DensityTable densities;
    if (!a.densities.empty()) {
        densities = parse_density_csv(read_file(a.densities));
        ctx.densities = &densities;
    }
    const MetaDataset data = parse_csv(read_file(a.csv));
    const AnalysisReport report = analyze(data, methods, ctx);
    write_text(a.out, dump_json(to_json(report)) + "\n");
    if (!a.svg.empty()) write_forest_svg(report, a.svg);
    for (const auto& m : report.methods) {
        if (m.outcome) return 0;
    }
    return kExitMethodFailure;
}

struct SimulateArgs {
    std::string config;
    int studies = 10;
    int median_n = 50;
    std::string outcome = "moderate";
    std::string het = "i25";
    std::string reporting = "s1";
    int reps = 500;
    std::uint64_t seed = 20180917;
    std::string methods = "wan,luo,mdm,qe";
    std::string model = "random";
    int abc_iterations = 20000;
    double abc_rate = 0.001;
    unsigned threads = 0;
    std::string out;
    std::string csv;
    bool full = false;
};

SimRequest build_request(const SimulateArgs& a, const CLI::App& app) {
    SimRequest r;
    if (!a.config.empty()) r = parse_sim_request(read_file(a.config));
    auto given = [&](const char* name) { return app.count(name) > 0; };
    auto& c = r.config;
    if (given("--studies") || a.config.empty()) c.n_studies = a.studies;
    if (given("--median-n") || a.config.empty()) c.median_n = a.median_n;
    if (given("--outcome") || a.config.empty()) c.outcome = parse_outcome(a.outcome);
    if (given("--het") || a.config.empty()) c.heterogeneity = parse_heterogeneity(a.het);
    if (given("--reporting") || a.config.empty()) c.reporting = parse_reporting(a.reporting);
    if (given("--reps") || a.config.empty()) c.replications = a.reps;
    if (given("--seed") || a.config.empty()) c.seed = a.seed;
    if (given("--model") || a.config.empty()) c.model = parse_model(a.model);
    if (given("--methods") || a.config.empty()) r.methods = parse_method_list(a.methods);
    if (given("--abc-iterations") || a.config.empty()) c.abc.iterations_per_family = a.abc_iterations;
    if (given("--abc-rate") || a.config.empty()) c.abc.acceptance_rate = a.abc_rate;
    if (a.full && !given("--reps")) c.replications = 1000;
    validate(c);
    return r;
}

ProgressFn progress_printer(const SimConfig& c, std::string label) {
    return [label = std::move(label), reps = c.replications, last = 0](int done, int total) mutable {
        const int decile = static_cast<int>(10LL * done / total);
        if (decile > last || done == total) {
            last = decile;
            std::fprintf(stderr, "%s%d/%d replications (%d%%)\n", label.c_str(), done, reps,
                         static_cast<int>(100LL * done / total));
        }
    };
}

int run_simulate(const SimulateArgs& a, const CLI::App& app) {
    const SimRequest req = build_request(a, app);
    std::vector<SimConfig> cells;
    if (a.full) {
        for (int k : {10, 30}) {
            for (int n : {50, 250}) {
                for (Outcome o : {Outcome::NormalNull, Outcome::NormalModerate, Outcome::Mixture}) {
                    for (Heterogeneity h : {Heterogeneity::None, Heterogeneity::I25, Heterogeneity::I75}) {
                        SimConfig c = req.config;
                        c.n_studies = k;
                        c.median_n = n;
                        c.outcome = o;
                        c.heterogeneity = h;
                        cells.push_back(c);
                    }
                }
            }
        }
    } else {
        cells.push_back(req.config);
    }

    Json all = Json::array();
    std::string csv;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string label =
            cells.size() > 1 ? "cell " + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + ": " : "";
        const SimMetrics m =
            run_simulation(cells[i], req.methods, progress_printer(cells[i], label), a.threads);
        all.push_back(to_json(m));
        std::string rows = metrics_csv(m);
        if (!csv.empty()) rows.erase(0, rows.find('\n') + 1);
        csv += rows;
    }
    const Json out = a.full ? all : all.front();
    write_text(a.out, dump_json(out) + "\n");
    if (!a.csv.empty()) write_text(a.csv, csv);
    return 0;
}

int run_example() {
    const std::string dir = MEDIAN_META_FIXTURE_DIR;
    std::cout << "TB diagnostic delay fixture: " << dir << "/tb.csv\n"
              << "Variant with every Xpert q3 reconstructed: " << dir << "/tb_reconstructed.csv\n\n"
              << "Reference pooled estimates (random effects):\n"
              << "  method  estimate  95% CI          tau2  I2(%)\n"
              << "  wan     2.08      [1.02, 3.14]    2.24  98.63\n"
              << "  luo     2.14      [1.07, 3.21]    2.29  98.66\n"
              << "  mdm     1.00      [0.16, 4.22]\n"
              << "  qe      1.05      [0.18, 1.91]    1.49  96.99\n\n"
              << "Caveats:\n"
              << "  The source summary data repeat each study's smear q3 in the Xpert arm,\n"
              << "  and Cohen et al 2014 Xpert reads (5.80, 6.80, 5.70), which is not monotone.\n"
              << "  tb.csv keeps the source values except that one, replaced by 8.59, the q3\n"
              << "  implied by the reference Wan difference of means. The transformation methods\n"
              << "  and the QE variances depend on these q3 values, so their results differ from\n"
              << "  the reference ones; the differences of medians and the MDM estimate do not.\n"
              << "  The exact sign-test interval for 9 studies is (y(2), y(8)) = (0.04, 4.00).\n\n"
              << "Try: median-meta analyze " << dir << "/tb.csv --methods qe,mdm,wan,luo --model random\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meta-analysis of two-group studies that report medians"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    AnalyzeArgs aa;
    auto* analyze_cmd = app.add_subcommand("analyze", "Analyze a summary-data CSV");
    analyze_cmd->add_option("csv", aa.csv, "Input CSV")->required();
    analyze_cmd->add_option("--methods", aa.methods, "Comma-separated methods")->capture_default_str();
    analyze_cmd->add_option("--model", aa.model, "fixed or random")->capture_default_str();
    analyze_cmd->add_option("--densities", aa.densities, "study_id,f1,f2 sidecar for qe-bc");
    analyze_cmd->add_option("--seed", aa.seed, "Seed for QE starts and ABC")->capture_default_str();
    analyze_cmd->add_option("--abc-iterations", aa.abc_iterations, "ABC iterations per family")
        ->capture_default_str();
    analyze_cmd->add_option("--abc-rate", aa.abc_rate, "ABC acceptance rate")->capture_default_str();
    analyze_cmd->add_option("-o,--out", aa.out, "JSON output file (default stdout)");
    analyze_cmd->add_option("--svg", aa.svg, "Forest plot output file");

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Run the simulation study for one design cell");
    sim_cmd->add_option("--config", sa.config, "key = value configuration file");
    sim_cmd->add_option("--studies", sa.studies, "Studies per meta-analysis")->capture_default_str();
    sim_cmd->add_option("--median-n", sa.median_n, "Median study size (50 or 250)")->capture_default_str();
    sim_cmd->add_option("--outcome", sa.outcome, "null, moderate or mixture")->capture_default_str();
    sim_cmd->add_option("--het", sa.het, "none, i25 or i75")->capture_default_str();
    sim_cmd->add_option("--reporting", sa.reporting, "s1, s2, s3, mix-sw, mix-random25 or means")
        ->capture_default_str();
    sim_cmd->add_option("--reps", sa.reps, "Replications")->capture_default_str();
    sim_cmd->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
    sim_cmd->add_option("--methods", sa.methods, "Comma-separated methods")->capture_default_str();
    sim_cmd->add_option("--model", sa.model, "fixed or random")->capture_default_str();
    sim_cmd->add_option("--abc-iterations", sa.abc_iterations, "ABC iterations per family")
        ->capture_default_str();
    sim_cmd->add_option("--abc-rate", sa.abc_rate, "ABC acceptance rate")->capture_default_str();
    sim_cmd->add_option("--threads", sa.threads, "Worker threads (0: MEDIAN_META_THREADS or all)");
    sim_cmd->add_option("-o,--out", sa.out, "JSON output file (default stdout)");
    sim_cmd->add_option("--csv", sa.csv, "Flat CSV output file");
    sim_cmd->add_flag("--full", sa.full, "All 36 design cells at 1000 replications (slow)");

    app.add_subcommand("example", "Show the TB fixture and its reference values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInputError;
    }

    try {
        if (analyze_cmd->parsed()) return run_analyze(aa);
        if (sim_cmd->parsed()) return run_simulate(sa, *sim_cmd);
        return run_example();
    } catch (const Error& e) {
        std::cout << dump_json(error_json(to_string(e.code()), e.what())) << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
