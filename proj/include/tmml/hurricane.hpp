#pragma once

// Hurricane-like field: a grid of cells carrying ensemble forecasts of
// several variables over time stages. Cells belong to spatially contiguous
// regimes; each regime fixes, per variable and stage, a pmf over value bins
// with a few narrow modes whose position follows the regime's intensity
// path, so variables move together within a regime. The module also runs the observation methods
// compared in the improvement report.

#include <tmml/belief.hpp>
#include <tmml/joint_clustering.hpp>
#include <tmml/mixture.hpp>
#include <tmml/planner.hpp>
#include <tmml/posterior.hpp>
#include <tmml/probability.hpp>
#include <tmml/regions.hpp>
#include <tmml/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace tmml {

struct HurricaneConfig {
    int rows = 50;
    int cols = 50;
    int stages = 12;
    std::vector<std::string> variables{"wind_speed", "temperature", "relative_humidity", "pressure"};
    int regimes = 11;
    int bins = 8;
    /// Ensemble members per (cell, variable, stage).
    int members = 40;
    /// Regimes cycle through min_modes..max_modes modes.
    int min_modes = 2;
    int max_modes = 3;
    double mode_separation = 2.5; ///< in bins
    double mode_width = 0.35;     ///< in bins
    double intensity_step = 0.15;

    void validate() const
    {
        detail::require(rows > 0 && cols > 0 && stages > 0, "HurricaneConfig: dimensions must be positive");
        detail::require(!variables.empty(), "HurricaneConfig: need at least one variable");
        detail::require(regimes >= 1 && regimes <= rows * cols, "HurricaneConfig: regimes must be in 1..cells");
        detail::require(bins >= 2 && members >= 1, "HurricaneConfig: bins >= 2, members >= 1");
        detail::require(min_modes >= 1 && max_modes >= min_modes, "HurricaneConfig: need 1 <= min_modes <= max_modes");
        detail::require(mode_width > 0.0, "HurricaneConfig: mode_width must be positive");
    }
};

/// Histograms are laid out stage-major: index stage * bins + bin.
struct HurricaneField {
    HurricaneConfig config;
    BeliefMap prior;
    std::vector<int> regime;
    std::vector<int> regime_modes;
    /// [variable][cell] ensemble counts.
    std::vector<std::vector<Histogram>> ensemble;
    /// [variable][cell] moment-matched discretized Gaussian counts.
    std::vector<std::vector<Histogram>> unimodal;
    /// Realized value per BeliefMap entry.
    std::vector<double> truth;
    std::vector<double> bin_values;
};

namespace detail {

inline std::vector<double> mode_pmf(const std::vector<double>& centres, const std::vector<double>& weights, int bins,
                                    double width)
{
    std::vector<double> p(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t m = 0; m < centres.size(); ++m) {
        for (int b = 0; b < bins; ++b) {
            const double z = (b - centres[m]) / width;
            p[static_cast<std::size_t>(b)] += weights[m] * std::exp(-0.5 * z * z);
        }
    }
    double total = 0.0;
    for (double x : p) {
        total += x;
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

/// Mean and population variance of a count vector over `values`.
inline std::pair<double, double> moments(std::span<const double> counts, std::span<const double> values)
{
    double n = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        n += counts[i];
        m += counts[i] * values[i];
    }
    m /= n;
    double v = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        v += counts[i] * (values[i] - m) * (values[i] - m);
    }
    return {m, v / n};
}

} // namespace detail

inline HurricaneField gen_hurricane_field(const HurricaneConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Rng rng(seed);
    const int nv = static_cast<int>(cfg.variables.size());
    const int B = cfg.bins;
    const int T = cfg.stages;
    const int R = cfg.regimes;
    const int cells = cfg.rows * cfg.cols;

    HurricaneField f;
    f.config = cfg;
    f.prior = BeliefMap(cfg.rows, cfg.cols, cfg.variables, T);
    const double half = (B - 1) / 2.0;
    for (int b = 0; b < B; ++b) {
        f.bin_values.push_back((b - half) / (half / 2.0));
    }
    f.regime = voronoi_regions(cfg.rows, cfg.cols, R, rng);

    // templates[r][v][t] is a pmf over bins.
    std::vector<std::vector<std::vector<std::vector<double>>>> templates(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const int modes = cfg.min_modes + r % (cfg.max_modes - cfg.min_modes + 1);
        f.regime_modes.push_back(modes);
        std::vector<double> intensity(static_cast<std::size_t>(T));
        intensity[0] = rng.uniform();
        for (int t = 1; t < T; ++t) {
            intensity[static_cast<std::size_t>(t)]
                = std::clamp(intensity[static_cast<std::size_t>(t - 1)] + rng.normal(0.0, cfg.intensity_step), 0.0, 1.0);
        }
        std::vector<double> weights(static_cast<std::size_t>(modes));
        for (auto& w : weights) {
            w = rng.uniform(0.3, 1.0);
        }
        auto& per_var = templates[static_cast<std::size_t>(r)];
        per_var.resize(static_cast<std::size_t>(nv));
        for (int v = 0; v < nv; ++v) {
            // Each regime has its own response of each variable to intensity.
            const double lo = 1.5;
            const double hi = B - 2.5;
            const double slope = rng.uniform(0.5, 1.0) * (hi - lo) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            const double base = slope > 0.0 ? rng.uniform(lo, hi - slope) : rng.uniform(lo - slope, hi);
            for (int t = 0; t < T; ++t) {
                const double centre = base + slope * intensity[static_cast<std::size_t>(t)];
                std::vector<double> centres;
                for (int m = 0; m < modes; ++m) {
                    centres.push_back(centre + cfg.mode_separation * (m - (modes - 1) / 2.0));
                }
                per_var[static_cast<std::size_t>(v)].push_back(detail::mode_pmf(centres, weights, B, cfg.mode_width));
            }
        }
    }

    f.ensemble.assign(static_cast<std::size_t>(nv), std::vector<Histogram>(static_cast<std::size_t>(cells)));
    f.unimodal = f.ensemble;
    f.truth.assign(f.prior.entry_count(), 0.0);
    std::vector<double> index_values(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        index_values[static_cast<std::size_t>(b)] = b;
    }
    for (int c = 0; c < cells; ++c) {
        const auto& tmpl = templates[static_cast<std::size_t>(f.regime[static_cast<std::size_t>(c)])];
        for (int v = 0; v < nv; ++v) {
            Histogram ens(static_cast<std::size_t>(B * T), 0.0);
            Histogram uni(static_cast<std::size_t>(B * T), 0.0);
            for (int t = 0; t < T; ++t) {
                const auto& pmf = tmpl[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)];
                const std::span<double> counts(ens.data() + t * B, static_cast<std::size_t>(B));
                for (int k = 0; k < cfg.members; ++k) {
                    counts[rng.categorical(pmf)] += 1.0;
                }
                f.truth[f.prior.index(c, v, t)] = f.bin_values[rng.categorical(pmf)];

                const auto [mean, var] = detail::moments(counts, f.bin_values);
                f.prior.set(c, v, t, mean, var);

                const auto [mb, vb] = detail::moments(counts, index_values);
                const std::span<double> g(uni.data() + t * B, static_cast<std::size_t>(B));
                if (vb > 0.0) {
                    const auto pmf_g = detail::mode_pmf({mb}, {1.0}, B, std::sqrt(vb));
                    for (int b = 0; b < B; ++b) {
                        g[static_cast<std::size_t>(b)] = cfg.members * pmf_g[static_cast<std::size_t>(b)];
                    }
                } else {
                    std::copy(counts.begin(), counts.end(), g.begin());
                }
            }
            f.ensemble[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] = std::move(ens);
            f.unimodal[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)] = std::move(uni);
        }
    }
    return f;
}

/// How a method groups cells for cluster propagation.
enum class Representation {
    none,       ///< no clusters: direct and radius updates only
    unimodal,   ///< per-variable EM on moment-matched Gaussian histograms
    multimodal, ///< per-variable EM on the ensemble histograms
    joint,      ///< one clustering over all variables and stages
};

struct MethodSpec {
    std::string name;
    Representation representation = Representation::none;
    bool multivariate = false;
    bool temporal = false;
};

/// The compared methods, baseline first.
inline std::vector<MethodSpec> default_methods()
{
    return {
        {"MDM", Representation::none, false, false},
        {"unimodal-univariate", Representation::unimodal, false, false},
        {"multimodal-univariate", Representation::multimodal, false, false},
        {"unimodal-multivariate", Representation::unimodal, true, false},
        {"multimodal-multivariate", Representation::multimodal, true, false},
        {"temporal-multivariate", Representation::multimodal, true, true},
        {"deep-multivariate", Representation::joint, true, false},
        {"deep-temporal", Representation::joint, true, true},
    };
}

struct ClusterSettings {
    int k = 11;
    EmOptions em{100, 1e-6, 2};
    KMeansOptions kmeans{};
};

struct HurricaneClusters {
    /// [variable][cell]
    std::vector<std::vector<int>> unimodal;
    std::vector<std::vector<int>> multimodal;
    std::vector<int> joint;
    /// Entropy percentages in BeliefMap cluster-id order.
    std::vector<double> unimodal_entropy;
    std::vector<double> multimodal_entropy;
    std::vector<double> joint_entropy;
    /// Row-major |Pearson correlation| of variable means across cells and stages.
    std::vector<double> correlation;
};

namespace detail {

inline double pooled_entropy(const std::vector<Histogram>& hist, const std::vector<int>& labels, int k)
{
    Histogram pooled(hist.front().size(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < hist.size(); ++i) {
        if (labels[i] == k) {
            any = true;
            for (std::size_t j = 0; j < pooled.size(); ++j) {
                pooled[j] += hist[i][j];
            }
        }
    }
    return any ? entropy_percent(frequencies(pooled)) : 0.0;
}

/// Per-variable EM labels and entropies in set_variable_clusters order.
inline void per_variable_clusters(const std::vector<std::vector<Histogram>>& hist, const ClusterSettings& s,
                                  std::uint64_t seed, std::vector<std::vector<int>>& labels, std::vector<double>& entropy)
{
    for (std::size_t v = 0; v < hist.size(); ++v) {
        const int k = std::min<int>(s.k, static_cast<int>(hist[v].size()));
        auto fit = em_fit_best(hist[v], k, Rng::derive(seed, v).next(), s.em);
        const int top = *std::max_element(fit.assignment.labels.begin(), fit.assignment.labels.end());
        for (int c = 0; c <= top; ++c) {
            entropy.push_back(pooled_entropy(hist[v], fit.assignment.labels, c));
        }
        labels.push_back(std::move(fit.assignment.labels));
    }
}

inline std::vector<double> variable_correlation(const BeliefMap& m)
{
    const std::size_t nv = m.variable_count();
    const std::size_t n = m.cell_count() * static_cast<std::size_t>(m.stages());
    std::vector<std::vector<double>> series(nv, std::vector<double>(n));
    for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t c = 0; c < m.cell_count(); ++c) {
            for (int t = 0; t < m.stages(); ++t) {
                series[v][c * static_cast<std::size_t>(m.stages()) + static_cast<std::size_t>(t)]
                    = m.mean(static_cast<int>(c), static_cast<int>(v), t);
            }
        }
    }
    std::vector<double> out(nv * nv, 0.0);
    for (std::size_t a = 0; a < nv; ++a) {
        for (std::size_t b = 0; b < nv; ++b) {
            if (a == b) {
                out[a * nv + b] = 1.0;
                continue;
            }
            const double ma = std::accumulate(series[a].begin(), series[a].end(), 0.0) / static_cast<double>(n);
            const double mb = std::accumulate(series[b].begin(), series[b].end(), 0.0) / static_cast<double>(n);
            double sab = 0.0;
            double saa = 0.0;
            double sbb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sab += (series[a][i] - ma) * (series[b][i] - mb);
                saa += (series[a][i] - ma) * (series[a][i] - ma);
                sbb += (series[b][i] - mb) * (series[b][i] - mb);
            }
            out[a * nv + b] = saa > 0.0 && sbb > 0.0 ? std::abs(sab) / std::sqrt(saa * sbb) : 0.0;
        }
    }
    return out;
}

} // namespace detail

inline HurricaneClusters cluster_hurricane(const HurricaneField& f, const ClusterSettings& s, std::uint64_t seed)
{
    detail::require(s.k >= 1, "cluster_hurricane: K must be >= 1");
    HurricaneClusters out;
    detail::per_variable_clusters(f.unimodal, s, Rng::derive(seed, 1).next(), out.unimodal, out.unimodal_entropy);
    detail::per_variable_clusters(f.ensemble, s, Rng::derive(seed, 2).next(), out.multimodal, out.multimodal_entropy);

    const int k = std::min<int>(s.k, static_cast<int>(f.prior.cell_count()));
    out.joint = assign_temporal_multivariate(f.prior, k, Rng::derive(seed, 3).next(), s.kmeans).labels;
    const int top = *std::max_element(out.joint.begin(), out.joint.end());
    for (int c = 0; c <= top; ++c) {
        double e = 0.0;
        for (const auto& hist : f.ensemble) {
            e += detail::pooled_entropy(hist, out.joint, c);
        }
        out.joint_entropy.push_back(e / static_cast<double>(f.ensemble.size()));
    }
    out.correlation = detail::variable_correlation(f.prior);
    return out;
}

struct ObservationSettings {
    int budget = 64;
    double sensor_variance = 0.5;
    double radius = 2.0;
    double entropy_threshold = 88.0;
    int min_samples = 2;
};

struct PathSettings {
    Point start{2.0, 2.0};
    /// Visited in turn; the agent replans toward the next one after arriving.
    std::vector<Point> goals{{47.0, 47.0}, {2.0, 47.0}, {47.0, 2.0}, {2.0, 2.0}};
    /// Leg budget as a multiple of the straight-line distance.
    double budget_factor = 1.3;
    PlannerOptions planner{4000, 1.0, std::numeric_limits<double>::infinity(), 6.0, 2.0, 2, 0.05, false};
    UtilityWeights weights{};
    /// MDM considers cells in this top fraction of the current sigma score.
    double mdm_top_fraction = 0.2;
};

struct MethodRun {
    std::string name;
    double improvement_percent = 0.0;
    std::vector<int> observed_cells;
    std::vector<RecourseStep> trace;
    /// Planned legs (TMML methods only).
    std::vector<nlohmann::json> legs;
    BeliefMap posterior;
};

/// Beliefs and propagation policy a method starts from.
inline BeliefMap method_beliefs(const HurricaneField& f, const HurricaneClusters& cl, const MethodSpec& m)
{
    BeliefMap b = f.prior;
    switch (m.representation) {
    case Representation::none:
        break;
    case Representation::unimodal:
        b.set_variable_clusters(cl.unimodal);
        b.set_cluster_entropy(cl.unimodal_entropy);
        break;
    case Representation::multimodal:
        b.set_variable_clusters(cl.multimodal);
        b.set_cluster_entropy(cl.multimodal_entropy);
        break;
    case Representation::joint: {
        b.set_variable_clusters(std::vector<std::vector<int>>(b.variable_count(), cl.joint));
        std::vector<double> entropy;
        for (std::size_t v = 0; v < b.variable_count(); ++v) {
            entropy.insert(entropy.end(), cl.joint_entropy.begin(), cl.joint_entropy.end());
        }
        b.set_cluster_entropy(entropy);
        break;
    }
    }
    return b;
}

inline PropagationPolicy method_policy(const HurricaneClusters& cl, const MethodSpec& m, const ObservationSettings& o,
                                       std::size_t nv)
{
    PropagationPolicy p;
    p.radius = o.radius;
    p.cluster_propagation = m.representation != Representation::none;
    p.across_stages = m.temporal;
    p.entropy_threshold = o.entropy_threshold;
    p.min_samples = o.min_samples;
    if (!m.multivariate) {
        p.variable_weights.assign(nv * nv, 0.0);
        for (std::size_t v = 0; v < nv; ++v) {
            p.variable_weights[v * nv + v] = 1.0;
        }
    } else if (m.representation != Representation::joint) {
        p.variable_weights = cl.correlation;
    }
    return p;
}

namespace detail {

/// Hands out observations: each cell at most once, `budget` in total.
/// Variables rotate and stages advance with the observation count; values
/// are truth plus seeded sensor noise that depends only on the entry.
class Observer {
public:
    Observer(const HurricaneField& f, const ObservationSettings& o, std::uint64_t seed)
        : field_(f), settings_(o), seed_(seed), seen_(f.prior.cell_count(), 0)
    {
    }

    bool exhausted() const { return static_cast<int>(cells_.size()) >= settings_.budget; }
    const std::vector<int>& cells() const { return cells_; }
    bool seen(int cell) const { return seen_[static_cast<std::size_t>(cell)] != 0; }

    std::vector<Observation> at(int cell)
    {
        if (exhausted() || seen(cell)) {
            return {};
        }
        const int k = static_cast<int>(cells_.size());
        const int nv = static_cast<int>(field_.prior.variable_count());
        const int T = field_.prior.stages();
        const int v = k % nv;
        const int t = std::min(T - 1, k * T / settings_.budget);
        const auto idx = field_.prior.index(cell, v, t);
        Rng noise = Rng::derive(seed_, idx);
        const double value = field_.truth[idx] + std::sqrt(settings_.sensor_variance) * noise.normal();
        seen_[static_cast<std::size_t>(cell)] = 1;
        cells_.push_back(cell);
        return {Observation{cell, v, t, value, settings_.sensor_variance}};
    }

private:
    const HurricaneField& field_;
    ObservationSettings settings_;
    std::uint64_t seed_;
    std::vector<char> seen_;
    std::vector<int> cells_;
};

/// Sum over variables of stage-averaged sd, each variable scaled by its max.
inline std::vector<double> sigma_score(const BeliefMap& b)
{
    UtilityWeights w{1.0, 0.0};
    return build_utility_map(b, w).values();
}

} // namespace detail

/// Greedy baseline: repeatedly walks to the nearest unobserved cell among
/// the currently most uncertain ones.
inline MethodRun run_mdm(const HurricaneField& f, const HurricaneClusters& cl, const MethodSpec& m,
                         const ObservationSettings& o, const PathSettings& ps, std::uint64_t seed)
{
    MethodRun run;
    run.name = m.name;
    BeliefMap beliefs = method_beliefs(f, cl, m);
    const auto policy = method_policy(cl, m, o, beliefs.variable_count());
    detail::Observer observer(f, o, seed);
    Point here = ps.start;
    const auto n = static_cast<int>(beliefs.cell_count());
    const int top = std::max(1, static_cast<int>(std::ceil(ps.mdm_top_fraction * n)));
    for (int step = 0; !observer.exhausted(); ++step) {
        const auto score = detail::sigma_score(beliefs);
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
        });
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n && (i < top || best < 0); ++i) {
            const int c = order[static_cast<std::size_t>(i)];
            if (observer.seen(c)) {
                continue;
            }
            const GridPos g = beliefs.position(c);
            const double d = distance(here, Point{static_cast<double>(g.row), static_cast<double>(g.col)});
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best < 0) {
            break;
        }
        for (const auto& obs : observer.at(best)) {
            apply_observation(beliefs, obs, policy);
        }
        const GridPos g = beliefs.position(best);
        here = Point{static_cast<double>(g.row), static_cast<double>(g.col)};
        run.trace.push_back({step, best, here, score[static_cast<std::size_t>(best)], beliefs.total_variance()});
    }
    run.observed_cells = observer.cells();
    run.improvement_percent = improvement_percent(f.prior, beliefs);
    run.posterior = std::move(beliefs);
    return run;
}

/// Utility-guided planning with online recourse, leg by leg, until the
/// observation budget is spent or every goal has been visited.
inline MethodRun run_tmml(const HurricaneField& f, const HurricaneClusters& cl, const MethodSpec& m,
                          const ObservationSettings& o, const PathSettings& ps, std::uint64_t seed)
{
    detail::require(!ps.goals.empty(), "run_tmml: need at least one goal");
    MethodRun run;
    run.name = m.name;
    BeliefMap beliefs = method_beliefs(f, cl, m);
    const auto policy = method_policy(cl, m, o, beliefs.variable_count());
    detail::Observer observer(f, o, seed);
    Point here = ps.start;
    int step_offset = 0;
    for (std::size_t leg = 0; leg < ps.goals.size() && !observer.exhausted(); ++leg) {
        const Point goal = ps.goals[leg];
        PlannerOptions popts = ps.planner;
        popts.max_cost = std::max(ps.budget_factor * distance(here, goal), popts.step);
        const auto map = build_utility_map(beliefs, ps.weights);
        PlanResult planned = plan(map, here, goal, popts, Rng::derive(seed, 100 + leg).next());
        if (!planned.found) {
            break;
        }
        RecourseOptions ropts;
        ropts.max_cost = popts.max_cost;
        ropts.weights = ps.weights;
        ropts.policy = policy;
        const auto observe = [&](int cell, int) { return observer.at(cell); };
        const auto result = online_recourse(planned, beliefs, observe, ropts);
        for (auto step : result.trace) {
            step.step += step_offset;
            run.trace.push_back(step);
        }
        step_offset += static_cast<int>(result.trace.size());
        run.legs.push_back(path_to_json(planned, build_utility_map(beliefs, ps.weights)));
        here = planned.tree[planned.path.back()].position;
    }
    run.observed_cells = observer.cells();
    run.improvement_percent = improvement_percent(f.prior, beliefs);
    run.posterior = std::move(beliefs);
    return run;
}

inline MethodRun run_method(const HurricaneField& f, const HurricaneClusters& cl, const MethodSpec& m,
                            const ObservationSettings& o, const PathSettings& ps, std::uint64_t seed)
{
    return m.representation == Representation::none ? run_mdm(f, cl, m, o, ps, seed) : run_tmml(f, cl, m, o, ps, seed);
}

} // namespace tmml
