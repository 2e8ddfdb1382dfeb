// Command-line front end: cluster, kf, plan, experiment, report.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.

#include <tmml/tmml.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

tmml::ExperimentSettings load_settings(const GlobalOptions& g)
{
    auto s = g.config.empty() ? tmml::ExperimentSettings{} : tmml::settings_from(tmml::Config::load(g.config));
    if (g.seed) {
        s.seed = g.seed;
    }
    return s;
}

std::ofstream output(const fs::path& p)
{
    return tmml::detail::open_output(p);
}

void print_rows(const std::vector<tmml::MethodRow>& rows)
{
    for (const auto& r : rows) {
        std::cout << "  " << std::left << std::setw(26) << r.method << std::right << std::setw(10)
                  << tmml::detail::fixed(r.improvement_percent, 2) << " %\n";
    }
}

// cluster ------------------------------------------------------------------

struct ClusterArgs {
    std::string input;
    std::string scenario = "traffic-grid";
    int k_min = 1;
    int k_max = 8;
    int restarts = 10;
};

int run_cluster(const GlobalOptions& g, const ClusterArgs& a)
{
    const auto s = load_settings(g);
    const std::uint64_t seed = s.require_seed();
    const fs::path out = g.out;

    if (a.input.empty() && a.scenario == "hurricane") {
        const auto field = tmml::gen_hurricane_field(s.hurricane, tmml::Rng::derive(seed, 1).next());
        const auto assignment = tmml::assign_temporal_multivariate(field.prior, s.clusters.k,
                                                                   tmml::Rng::derive(seed, 2).next(), s.clusters.kmeans);
        std::vector<std::string> ids(field.prior.cell_count());
        for (std::size_t c = 0; c < ids.size(); ++c) {
            ids[c] = std::to_string(c);
        }
        auto os = output(out / "clusters.csv");
        tmml::write_assignment_csv(os, ids, assignment);
        std::cout << "joint clustering of " << ids.size() << " cells into " << s.clusters.k << " clusters\n";
        return 0;
    }

    tmml::HistogramMatrix m;
    if (!a.input.empty()) {
        m = tmml::read_histogram_csv(a.input);
    } else if (a.scenario == "traffic-grid") {
        const auto grid = tmml::gen_traffic_grid(s.traffic_grid, seed);
        for (double mode : s.traffic_grid.modes) {
            std::ostringstream name;
            name << mode << "min";
            m.categories.push_back(name.str());
        }
        for (std::size_t c = 0; c < grid.history.size(); ++c) {
            m.ids.push_back(std::to_string(c));
        }
        m.rows = grid.history;
        auto os = output(out / "histograms.csv");
        tmml::write_histogram_csv(os, m);
    } else {
        throw tmml::ValidationError("unknown scenario '" + a.scenario + "' (expected traffic-grid or hurricane)");
    }
    if (a.k_min < 1 || a.k_max < a.k_min) {
        throw tmml::ValidationError("need 1 <= --k-min <= --k-max");
    }
    std::vector<int> ks;
    for (int k = a.k_min; k <= std::min<int>(a.k_max, static_cast<int>(m.rows.size())); ++k) {
        ks.push_back(k);
    }
    tmml::EmOptions em;
    em.n_restarts = a.restarts;
    const auto sel = tmml::select_k(m.rows, ks, seed, em);
    {
        auto os = output(out / "clusters.csv");
        tmml::write_assignment_csv(os, m.ids, sel.fit.assignment);
    }
    {
        auto os = output(out / "bic.csv");
        os << "k,bic\n";
        os.precision(12);
        for (const auto& [k, score] : sel.bic_by_k) {
            os << k << ',' << score << '\n';
        }
    }
    std::cout << "selected K = " << sel.best_k << " for " << m.rows.size() << " items\n";
    return 0;
}

// kf -----------------------------------------------------------------------

struct KfArgs {
    std::string input;
    std::string mode = "both";
    bool save_input = false;
};

int run_kf(const GlobalOptions& g, const KfArgs& a)
{
    const auto s = load_settings(g);
    const std::uint64_t seed = s.require_seed();
    const fs::path out = g.out;
    if (a.mode != "both") {
        tmml::parse_kf_mode(a.mode);
    }

    tmml::KfExperimentResult result;
    if (!a.input.empty()) {
        const auto ingested = tmml::ingest_speed_csv(a.input, s.traffic.intervals);
        if (ingested.duplicates > 0) {
            std::cerr << "warning: " << ingested.duplicates << " duplicate rows (last value kept)\n";
        }
        result = tmml::run_kf_experiment(ingested.tensor, nullptr, s.kf, seed);
    } else {
        const auto data = tmml::gen_traffic_speeds(s.traffic, tmml::Rng::derive(seed, 4).next());
        if (a.save_input) {
            auto os = output(out / "speeds.csv");
            tmml::write_speed_csv(os, data.observed);
        }
        result = tmml::run_kf_experiment(data.observed, &data.truth, s.kf, tmml::Rng::derive(seed, 5).next());
    }

    std::vector<tmml::KfLinkTrace> kept;
    for (const auto& t : result.traces) {
        if (a.mode == "both" || a.mode == tmml::to_string(t.mode)) {
            kept.push_back(t);
        }
    }
    {
        auto os = output(out / "kf_trace.csv");
        tmml::write_kf_trace_csv(os, kept);
    }
    {
        auto os = output(out / "kf_summary.csv");
        tmml::write_kf_summary_csv(os, result);
    }
    std::cout << "KF mean absolute error: no_tml " << tmml::detail::fixed(result.mae_no_tml, 3) << ", tml "
              << tmml::detail::fixed(result.mae_tml, 3) << " (K = " << result.k << ", delta_p > 0 on "
              << tmml::detail::fixed(100.0 * result.delta_p_positive, 1) << "% of intervals)\n";
    return 0;
}

// plan ---------------------------------------------------------------------

struct PlanArgs {
    std::string scenario = "hurricane";
    std::optional<int> samples;
    std::string method = "deep-temporal";
};

int run_plan(const GlobalOptions& g, const PlanArgs& a)
{
    auto s = load_settings(g);
    const std::uint64_t seed = s.require_seed();
    const fs::path out = g.out;
    if (a.samples) {
        if (*a.samples < 1) {
            throw tmml::ValidationError("--samples must be >= 1");
        }
        s.path.planner.samples = *a.samples;
    }

    if (a.scenario == "hurricane") {
        s.methods = {a.method};
        const auto spec = s.method_specs().front();
        const auto field = tmml::gen_hurricane_field(s.hurricane, tmml::Rng::derive(seed, 1).next());
        const auto clusters = tmml::cluster_hurricane(field, s.clusters, tmml::Rng::derive(seed, 2).next());
        const auto run = tmml::run_method(field, clusters, spec, s.observation, s.path, tmml::Rng::derive(seed, 3).next());
        nlohmann::json doc;
        doc["method"] = run.name;
        doc["improvement_percent"] = run.improvement_percent;
        doc["observed_cells"] = run.observed_cells;
        doc["legs"] = run.legs;
        {
            auto os = output(out / "path.json");
            os << doc.dump(2) << '\n';
        }
        {
            auto os = output(out / "plan_trace.csv");
            tmml::write_trace_csv(os, run.trace);
        }
        {
            auto os = output(out / "beliefs.json");
            os << tmml::to_json(run.posterior).dump() << '\n';
        }
        std::cout << run.name << ": observed " << run.observed_cells.size() << " cells, improvement "
                  << tmml::detail::fixed(run.improvement_percent, 2) << " %\n";
        return 0;
    }
    if (a.scenario != "traffic-grid") {
        throw tmml::ValidationError("unknown scenario '" + a.scenario + "' (expected hurricane or traffic-grid)");
    }

    auto grid = tmml::gen_traffic_grid(s.traffic_grid, seed);
    const tmml::BeliefMap prior = grid.beliefs;
    const tmml::Point start{0.0, 0.0};
    const tmml::Point goal{static_cast<double>(s.traffic_grid.rows - 1), static_cast<double>(s.traffic_grid.cols - 1)};
    auto popts = s.path.planner;
    popts.max_cost = s.path.budget_factor * tmml::distance(start, goal);
    const auto map = tmml::build_utility_map(grid.beliefs, s.path.weights);
    auto planned = tmml::plan(map, start, goal, popts, tmml::Rng::derive(seed, 3).next());
    if (!planned.found) {
        throw tmml::NumericError("plan: no path to the goal within the budget");
    }
    std::vector<char> seen(grid.beliefs.cell_count(), 0);
    const auto observe = [&](int cell, int) {
        std::vector<tmml::Observation> obs;
        if (!seen[static_cast<std::size_t>(cell)]) {
            seen[static_cast<std::size_t>(cell)] = 1;
            obs.push_back({cell, 0, 0, grid.truth[static_cast<std::size_t>(cell)], s.observation.sensor_variance});
        }
        return obs;
    };
    tmml::RecourseOptions ropts;
    ropts.max_cost = popts.max_cost;
    ropts.weights = s.path.weights;
    ropts.policy.radius = s.observation.radius;
    const auto result = tmml::online_recourse(planned, grid.beliefs, observe, ropts);
    {
        auto os = output(out / "path.json");
        os << tmml::path_to_json(planned, tmml::build_utility_map(grid.beliefs, s.path.weights)).dump(2) << '\n';
    }
    {
        auto os = output(out / "plan_trace.csv");
        tmml::write_recourse_csv(os, result);
    }
    {
        auto os = output(out / "beliefs.json");
        os << tmml::to_json(grid.beliefs).dump() << '\n';
    }
    std::cout << "traffic grid: " << result.executed.size() << " steps, " << result.replacements
              << " recourse replacements, improvement " << tmml::detail::fixed(tmml::improvement_percent(prior, grid.beliefs), 2)
              << " %\n";
    return 0;
}

// experiment / report ------------------------------------------------------

int run_experiment_cmd(const GlobalOptions& g)
{
    const auto s = load_settings(g);
    const auto report = tmml::run_experiment(s);
    tmml::write_experiment(report, s, g.out);
    std::cout << "improvement in prediction uncertainty (seed " << report.seed << ")\n";
    print_rows(report.rows);
    if (report.kf) {
        std::cout << "KF mean absolute error: no_tml " << tmml::detail::fixed(report.kf->mae_no_tml, 3) << ", tml "
                  << tmml::detail::fixed(report.kf->mae_tml, 3) << "\n";
    }
    std::cout << "outputs in " << g.out << " (" << tmml::detail::fixed(report.runtime_seconds, 1) << " s)\n";
    return 0;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::ifstream in(p);
    if (!in) {
        throw tmml::ValidationError("cannot read '" + p.string() + "'; run `experiment` first");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            rows.push_back(tmml::detail::split_csv_line(line));
        }
    }
    return rows;
}

int run_report(const GlobalOptions& g)
{
    const fs::path dir = g.out;
    const auto rows = read_csv(dir / "report.csv");
    if (rows.empty() || rows.front() != std::vector<std::string>{"method", "improvement_percent"}) {
        throw tmml::ValidationError((dir / "report.csv").string() + ": unexpected header");
    }
    std::cout << "improvement in prediction uncertainty\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) {
            throw tmml::ValidationError((dir / "report.csv").string() + ":" + std::to_string(i + 1) + ": malformed row");
        }
        std::cout << "  " << std::left << std::setw(26) << rows[i][0] << std::right << std::setw(12) << rows[i][1] << " %\n";
    }
    if (fs::exists(dir / "kf_summary.csv")) {
        std::cout << "KF comparison\n";
        const auto kf = read_csv(dir / "kf_summary.csv");
        for (std::size_t i = 1; i < kf.size(); ++i) {
            if (kf[i].size() == 2) {
                std::cout << "  " << std::left << std::setw(26) << kf[i][0] << std::right << std::setw(12) << kf[i][1] << '\n';
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Temporal multimodal multivariate learning toolkit"};
    app.fallthrough();
    app.require_subcommand(1);

    GlobalOptions g;
    std::string seed_text;
    app.add_option("--config", g.config, "Scenario config file (TOML subset)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed_text, "Random seed (unsigned 64-bit); overrides experiment.seed");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    ClusterArgs ca;
    auto* cluster = app.add_subcommand("cluster", "Cluster histograms with EM and BIC model selection");
    cluster->add_option("--input", ca.input, "Histogram matrix CSV (item_id,<category>,...)")->check(CLI::ExistingFile);
    cluster->add_option("--scenario", ca.scenario, "Synthetic source without --input: traffic-grid or hurricane")
        ->capture_default_str();
    cluster->add_option("--k-min", ca.k_min, "Smallest K tried")->capture_default_str();
    cluster->add_option("--k-max", ca.k_max, "Largest K tried")->capture_default_str();
    cluster->add_option("--restarts", ca.restarts, "EM restarts per K")->capture_default_str()->check(CLI::PositiveNumber);

    KfArgs ka;
    auto* kf = app.add_subcommand("kf", "Kalman filter speed prediction with and without TML");
    kf->add_option("--input", ka.input, "Speed CSV (link_id,day,interval_index,speed_mph); last day is predicted")
        ->check(CLI::ExistingFile);
    kf->add_option("--mode", ka.mode, "tml, no_tml or both")->capture_default_str();
    kf->add_flag("--save-input", ka.save_input, "Also write the synthetic speeds to <out>/speeds.csv");

    PlanArgs pa;
    std::optional<int> samples;
    auto* plan = app.add_subcommand("plan", "Plan an observation path and execute it with online recourse");
    plan->add_option("--scenario", pa.scenario, "hurricane or traffic-grid")->capture_default_str();
    plan->add_option("--samples", samples, "RRT* samples per leg");
    plan->add_option("--method", pa.method, "Hurricane method name")->capture_default_str();

    app.add_subcommand("experiment", "Run every method and the KF comparison; write report and plot data");
    app.add_subcommand("report", "Print the report stored in --out");

    // Name a mistyped subcommand instead of reporting a missing one.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" || arg == "--seed" || arg == "--out") {
            ++i;
            continue;
        }
        if (arg.rfind("-", 0) == 0) {
            continue;
        }
        if (!app.get_subcommand_no_throw(arg)) {
            std::cerr << "error: unknown subcommand '" << arg << "'\n\n" << app.help();
            return 1;
        }
        break;
    }

    try {
        app.parse(argc, argv);
        if (!seed_text.empty()) {
            std::uint64_t v = 0;
            if (!tmml::detail::parse_number(seed_text, v)) {
                throw tmml::ValidationError("--seed must be an unsigned 64-bit integer, got '" + seed_text + "'");
            }
            g.seed = v;
        }
        pa.samples = samples;
        if (cluster->parsed()) {
            return run_cluster(g, ca);
        }
        if (kf->parsed()) {
            return run_kf(g, ka);
        }
        if (plan->parsed()) {
            return run_plan(g, pa);
        }
        if (app.got_subcommand("experiment")) {
            return run_experiment_cmd(g);
        }
        return run_report(g);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const tmml::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}
