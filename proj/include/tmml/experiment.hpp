#pragma once

// Experiment settings, their config-file mapping, and the full run that
// produces the improvement report, KF comparison and plot data.

#include <tmml/config.hpp>
#include <tmml/hurricane.hpp>
#include <tmml/traffic.hpp>
#include <tmml/traffic_grid.hpp>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tmml {

struct ExperimentSettings {
    std::optional<std::uint64_t> seed;
    HurricaneConfig hurricane;
    ClusterSettings clusters;
    ObservationSettings observation;
    PathSettings path;
    std::vector<std::string> methods;
    /// Method whose path and posterior are written out.
    std::string showcase = "deep-temporal";
    bool run_kf = true;
    TrafficConfig traffic;
    KfExperimentOptions kf;
    TrafficGridConfig traffic_grid;

    std::uint64_t require_seed() const
    {
        if (!seed) {
            throw ValidationError("a seed is required: set experiment.seed in the config or pass --seed");
        }
        return *seed;
    }

    std::vector<MethodSpec> method_specs() const
    {
        const auto all = default_methods();
        if (methods.empty()) {
            return all;
        }
        std::vector<MethodSpec> out;
        for (const auto& name : methods) {
            const auto it = std::find_if(all.begin(), all.end(), [&](const MethodSpec& m) { return m.name == name; });
            if (it == all.end()) {
                throw ValidationError("unknown method '" + name + "'");
            }
            if (std::any_of(out.begin(), out.end(), [&](const MethodSpec& m) { return m.name == name; })) {
                throw ValidationError("method '" + name + "' listed twice");
            }
            out.push_back(*it);
        }
        return out;
    }

    void validate() const
    {
        hurricane.validate();
        traffic.validate();
        traffic_grid.validate();
        method_specs();
        detail::require(clusters.k >= 1, "clusters.k must be >= 1");
        detail::require(observation.budget >= 0, "observation.budget must be >= 0");
        detail::require(observation.sensor_variance >= 0.0, "observation.sensor_variance must be >= 0");
        detail::require(observation.radius > 0.0, "observation.radius must be positive");
        detail::require(observation.min_samples >= 1, "observation.min_samples must be >= 1");
        detail::require(path.budget_factor >= 1.0, "planner.budget_factor must be >= 1");
        detail::require(path.planner.samples >= 1 && path.planner.restarts >= 1, "planner samples/restarts must be >= 1");
        detail::require(!path.goals.empty(), "planner.goals must list at least one point");
        const auto inside = [&](Point p) {
            return p.row >= 0 && p.col >= 0 && p.row <= hurricane.rows - 1 && p.col <= hurricane.cols - 1;
        };
        detail::require(inside(path.start), "planner.start lies outside the grid");
        for (const auto& g : path.goals) {
            detail::require(inside(g), "planner.goals has a point outside the grid");
        }
        detail::require(kf.min_members >= 1, "kf.min_members must be >= 1");
    }
};

namespace detail {

inline const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "experiment.seed", "experiment.methods", "experiment.showcase", "experiment.run_kf",
        "hurricane.rows", "hurricane.cols", "hurricane.stages", "hurricane.variables", "hurricane.regimes",
        "hurricane.bins", "hurricane.members", "hurricane.min_modes", "hurricane.max_modes",
        "hurricane.mode_separation", "hurricane.mode_width", "hurricane.intensity_step",
        "clustering.k", "clustering.em_restarts", "clustering.em_max_iter", "clustering.kmeans_restarts",
        "observation.budget", "observation.sensor_variance", "observation.radius", "observation.entropy_threshold",
        "observation.min_samples",
        "planner.samples", "planner.step", "planner.restarts", "planner.gamma", "planner.near_cap",
        "planner.goal_bias", "planner.budget_factor", "planner.start", "planner.goals", "planner.sigma_weight",
        "planner.entropy_weight", "planner.mdm_top_fraction",
        "traffic.links", "traffic.intervals", "traffic.history_days", "traffic.group_free_speed", "traffic.group_drop",
        "traffic.group_window_start", "traffic.window_length", "traffic.congestion_probability",
        "traffic.link_spread", "traffic.drop_spread", "traffic.day_noise_sd", "traffic.sensor_sd",
        "kf.R", "kf.q_speed", "kf.q_accel", "kf.bins", "kf.speed_max", "kf.k_range", "kf.min_members",
        "kf.cluster_variance",
        "traffic_grid.rows", "traffic_grid.cols", "traffic_grid.modes", "traffic_grid.templates",
        "traffic_grid.history_draws",
    };
    return keys;
}

inline Point point_from(const std::vector<double>& v, const std::string& key)
{
    require(v.size() == 2, key + " must be [row, col]");
    return {v[0], v[1]};
}

inline std::vector<int> ints_from(const std::vector<double>& v, const std::string& key)
{
    std::vector<int> out;
    for (double d : v) {
        require(d == std::floor(d), key + " must hold integers");
        out.push_back(static_cast<int>(d));
    }
    return out;
}

} // namespace detail

/// Settings from a config document; absent keys keep their defaults.
inline ExperimentSettings settings_from(const Config& c)
{
    for (const auto& [key, value] : c.values()) {
        if (!detail::known_keys().count(key)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
    ExperimentSettings s;
    if (c.has("experiment.seed")) {
        const double seed = c.number("experiment.seed", 0);
        detail::require(seed >= 0 && seed == std::floor(seed) && seed < 9007199254740992.0,
                        "experiment.seed must be a non-negative integer");
        s.seed = static_cast<std::uint64_t>(seed);
    }
    s.methods = c.strings("experiment.methods", {});
    s.showcase = c.string("experiment.showcase", s.showcase);
    s.run_kf = c.boolean("experiment.run_kf", s.run_kf);

    auto& h = s.hurricane;
    h.rows = c.integer("hurricane.rows", h.rows);
    h.cols = c.integer("hurricane.cols", h.cols);
    h.stages = c.integer("hurricane.stages", h.stages);
    h.variables = c.strings("hurricane.variables", h.variables);
    h.regimes = c.integer("hurricane.regimes", h.regimes);
    h.bins = c.integer("hurricane.bins", h.bins);
    h.members = c.integer("hurricane.members", h.members);
    h.min_modes = c.integer("hurricane.min_modes", h.min_modes);
    h.max_modes = c.integer("hurricane.max_modes", h.max_modes);
    h.mode_separation = c.number("hurricane.mode_separation", h.mode_separation);
    h.mode_width = c.number("hurricane.mode_width", h.mode_width);
    h.intensity_step = c.number("hurricane.intensity_step", h.intensity_step);

    s.clusters.k = c.integer("clustering.k", s.clusters.k);
    s.clusters.em.n_restarts = c.integer("clustering.em_restarts", s.clusters.em.n_restarts);
    s.clusters.em.max_iter = c.integer("clustering.em_max_iter", s.clusters.em.max_iter);
    s.clusters.kmeans.n_init = c.integer("clustering.kmeans_restarts", s.clusters.kmeans.n_init);

    auto& o = s.observation;
    o.budget = c.integer("observation.budget", o.budget);
    o.sensor_variance = c.number("observation.sensor_variance", o.sensor_variance);
    o.radius = c.number("observation.radius", o.radius);
    o.entropy_threshold = c.number("observation.entropy_threshold", o.entropy_threshold);
    o.min_samples = c.integer("observation.min_samples", o.min_samples);

    auto& p = s.path;
    p.planner.samples = c.integer("planner.samples", p.planner.samples);
    p.planner.step = c.number("planner.step", p.planner.step);
    p.planner.restarts = c.integer("planner.restarts", p.planner.restarts);
    p.planner.gamma = c.number("planner.gamma", p.planner.gamma);
    p.planner.near_cap = c.number("planner.near_cap", p.planner.near_cap);
    p.planner.goal_bias = c.number("planner.goal_bias", p.planner.goal_bias);
    p.budget_factor = c.number("planner.budget_factor", p.budget_factor);
    p.weights.sigma = c.number("planner.sigma_weight", p.weights.sigma);
    p.weights.entropy = c.number("planner.entropy_weight", p.weights.entropy);
    p.mdm_top_fraction = c.number("planner.mdm_top_fraction", p.mdm_top_fraction);
    if (c.has("planner.start")) {
        p.start = detail::point_from(c.numbers("planner.start", {}), "planner.start");
    }
    if (c.has("planner.goals")) {
        const auto flat = c.numbers("planner.goals", {});
        detail::require(flat.size() % 2 == 0, "planner.goals must be a flat list of row, col pairs");
        p.goals.clear();
        for (std::size_t i = 0; i < flat.size(); i += 2) {
            p.goals.push_back({flat[i], flat[i + 1]});
        }
    }

    auto& t = s.traffic;
    t.links = c.integer("traffic.links", t.links);
    t.intervals = c.integer("traffic.intervals", t.intervals);
    t.history_days = c.integer("traffic.history_days", t.history_days);
    t.group_free_speed = c.numbers("traffic.group_free_speed", t.group_free_speed);
    t.group_drop = c.numbers("traffic.group_drop", t.group_drop);
    if (c.has("traffic.group_window_start")) {
        t.group_window_start = detail::ints_from(c.numbers("traffic.group_window_start", {}), "traffic.group_window_start");
    }
    t.window_length = c.integer("traffic.window_length", t.window_length);
    t.congestion_probability = c.number("traffic.congestion_probability", t.congestion_probability);
    t.link_spread = c.number("traffic.link_spread", t.link_spread);
    t.drop_spread = c.number("traffic.drop_spread", t.drop_spread);
    t.day_noise_sd = c.number("traffic.day_noise_sd", t.day_noise_sd);
    t.sensor_sd = c.number("traffic.sensor_sd", t.sensor_sd);

    auto& k = s.kf;
    k.params.R = c.number("kf.R", k.params.R);
    k.params.Q(0, 0) = c.number("kf.q_speed", k.params.Q(0, 0));
    k.params.Q(1, 1) = c.number("kf.q_accel", k.params.Q(1, 1));
    detail::require(k.params.R >= 0.0 && k.params.Q(0, 0) >= 0.0 && k.params.Q(1, 1) >= 0.0,
                    "kf noise parameters must be >= 0");
    k.bins = c.integer("kf.bins", k.bins);
    k.speed_max = c.number("kf.speed_max", k.speed_max);
    if (c.has("kf.k_range")) {
        k.k_range = detail::ints_from(c.numbers("kf.k_range", {}), "kf.k_range");
    }
    k.min_members = c.integer("kf.min_members", k.min_members);
    const auto cv = c.string("kf.cluster_variance", "sample");
    if (cv == "sample") {
        k.cluster_variance = ClusterVariance::sample;
    } else if (cv == "of_mean") {
        k.cluster_variance = ClusterVariance::of_mean;
    } else {
        throw ValidationError("kf.cluster_variance must be \"sample\" or \"of_mean\"");
    }

    auto& g = s.traffic_grid;
    g.rows = c.integer("traffic_grid.rows", g.rows);
    g.cols = c.integer("traffic_grid.cols", g.cols);
    g.modes = c.numbers("traffic_grid.modes", g.modes);
    g.history_draws = c.integer("traffic_grid.history_draws", g.history_draws);
    if (c.has("traffic_grid.templates")) {
        const auto flat = c.numbers("traffic_grid.templates", {});
        detail::require(!g.modes.empty() && !flat.empty() && flat.size() % g.modes.size() == 0,
                        "traffic_grid.templates must hold one weight per mode for each template");
        g.templates.clear();
        for (std::size_t i = 0; i < flat.size(); i += g.modes.size()) {
            g.templates.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                     flat.begin() + static_cast<std::ptrdiff_t>(i + g.modes.size()));
        }
    }

    s.validate();
    return s;
}

struct MethodRow {
    std::string method;
    double improvement_percent = 0.0;
    int observed_cells = 0;
};

struct ExperimentReport {
    std::uint64_t seed = 0;
    std::vector<MethodRow> rows;
    std::vector<MethodRun> runs;
    HurricaneField field;
    HurricaneClusters clusters;
    std::optional<KfExperimentResult> kf;
    double runtime_seconds = 0.0;

    const MethodRow& row(const std::string& method) const
    {
        for (const auto& r : rows) {
            if (r.method == method) {
                return r;
            }
        }
        throw ValidationError("no report row for method '" + method + "'");
    }
};

inline ExperimentReport run_experiment(const ExperimentSettings& s)
{
    s.validate();
    const std::uint64_t seed = s.require_seed();
    const auto started = std::chrono::steady_clock::now();

    ExperimentReport report;
    report.seed = seed;
    report.field = gen_hurricane_field(s.hurricane, Rng::derive(seed, 1).next());
    report.clusters = cluster_hurricane(report.field, s.clusters, Rng::derive(seed, 2).next());
    const std::uint64_t run_seed = Rng::derive(seed, 3).next();
    for (const auto& m : s.method_specs()) {
        auto run = run_method(report.field, report.clusters, m, s.observation, s.path, run_seed);
        report.rows.push_back({m.name, run.improvement_percent, static_cast<int>(run.observed_cells.size())});
        report.runs.push_back(std::move(run));
    }
    if (s.run_kf) {
        const auto data = gen_traffic_speeds(s.traffic, Rng::derive(seed, 4).next());
        report.kf = run_kf_experiment(data.observed, &data.truth, s.kf, Rng::derive(seed, 5).next());
    }
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p)
{
    std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write '" + p.string() + "'");
    }
    return os;
}

inline std::string fixed(double v, int digits = 6)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

} // namespace detail

inline void write_report_csv(std::ostream& os, const std::vector<MethodRow>& rows)
{
    os << "method,improvement_percent\n";
    for (const auto& r : rows) {
        os << r.method << ',' << detail::fixed(r.improvement_percent) << '\n';
    }
}

inline void write_kf_summary_csv(std::ostream& os, const KfExperimentResult& kf)
{
    os << "metric,value\n";
    os << "mae_no_tml," << detail::fixed(kf.mae_no_tml) << '\n';
    os << "mae_tml," << detail::fixed(kf.mae_tml) << '\n';
    os << "delta_p_positive_share," << detail::fixed(kf.delta_p_positive) << '\n';
    os << "clusters," << kf.k << '\n';
    os << "scored_intervals," << kf.compared << '\n';
}

/// Writes every output file of an experiment under `dir`. Contents depend
/// only on the settings and seed.
inline void write_experiment(const ExperimentReport& r, const ExperimentSettings& s, const std::filesystem::path& dir)
{
    {
        auto os = detail::open_output(dir / "report.csv");
        write_report_csv(os, r.rows);
    }
    if (r.kf) {
        auto trace = detail::open_output(dir / "kf_trace.csv");
        write_kf_trace_csv(trace, r.kf->traces);
        auto summary = detail::open_output(dir / "kf_summary.csv");
        write_kf_summary_csv(summary, *r.kf);
        auto dp = detail::open_output(dir / "plotdata" / "kf_delta_p.csv");
        dp << "link_id,interval_index,p11_first,p11,delta_p\n";
        dp.precision(10);
        for (const auto& tr : r.kf->traces) {
            if (tr.mode != KfMode::tml) {
                continue;
            }
            for (const auto& row : tr.rows) {
                dp << tr.link_id << ',' << row.interval << ',' << row.p11_first << ',' << row.p11 << ',' << row.delta_p
                   << '\n';
            }
        }
    }

    const MethodRun* showcase = nullptr;
    for (const auto& run : r.runs) {
        if (run.name == s.showcase) {
            showcase = &run;
        }
        auto os = detail::open_output(dir / "plotdata" / (run.name + "_trace.csv"));
        write_trace_csv(os, run.trace);
    }
    if (!showcase && !r.runs.empty()) {
        showcase = &r.runs.back();
    }
    if (showcase) {
        nlohmann::json doc;
        doc["method"] = showcase->name;
        doc["improvement_percent"] = showcase->improvement_percent;
        doc["observed_cells"] = showcase->observed_cells;
        doc["legs"] = showcase->legs;
        auto os = detail::open_output(dir / "path.json");
        os << doc.dump(2) << '\n';
        auto beliefs = detail::open_output(dir / "beliefs.json");
        beliefs << to_json(showcase->posterior).dump() << '\n';
    }

    {
        auto os = detail::open_output(dir / "clusters.csv");
        std::vector<std::string> ids;
        for (std::size_t c = 0; c < r.clusters.joint.size(); ++c) {
            ids.push_back(std::to_string(c));
        }
        write_assignment_csv(os, ids, detail::hard_assignment(r.clusters.joint, static_cast<int>(r.clusters.joint_entropy.size())));
    }
    {
        const auto& prior = r.field.prior;
        const auto utility = build_utility_map(prior, s.path.weights);
        auto os = detail::open_output(dir / "plotdata" / "field.csv");
        os << "row,col,regime,joint_cluster,prior_utility\n";
        os.precision(10);
        for (int c = 0; c < static_cast<int>(prior.cell_count()); ++c) {
            const auto g = prior.position(c);
            os << g.row << ',' << g.col << ',' << r.field.regime[static_cast<std::size_t>(c)] << ','
               << r.clusters.joint[static_cast<std::size_t>(c)] << ',' << utility[c] << '\n';
        }
    }
    {
        nlohmann::json meta;
        meta["seed"] = r.seed;
        meta["methods"] = nlohmann::json::array();
        for (const auto& row : r.rows) {
            meta["methods"].push_back({{"method", row.method},
                                       {"improvement_percent", row.improvement_percent},
                                       {"observed_cells", row.observed_cells}});
        }
        meta["grid"] = {{"rows", s.hurricane.rows}, {"cols", s.hurricane.cols}, {"stages", s.hurricane.stages},
                        {"variables", s.hurricane.variables}};
        meta["observation_budget"] = s.observation.budget;
        auto os = detail::open_output(dir / "metadata.json");
        os << meta.dump(2) << '\n';
    }
}

} // namespace tmml
