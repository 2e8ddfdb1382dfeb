#pragma once

// Grid of links whose travel times follow multimodal distributions drawn
// from a few cluster templates.

#include <tmml/belief.hpp>
#include <tmml/mixture.hpp>
#include <tmml/probability.hpp>
#include <tmml/regions.hpp>
#include <tmml/rng.hpp>

#include <vector>

namespace tmml {

struct TrafficGridConfig {
    int rows = 10;
    int cols = 10;
    /// Travel-time modes in minutes.
    std::vector<double> modes{2.0, 5.0, 10.0, 30.0};
    /// One weight vector over `modes` per cluster template.
    std::vector<std::vector<double>> templates{{0.8, 0.2, 0.0, 0.0}, {0.0, 0.3, 0.2, 0.5}};
    /// Draws per cell for the historical histogram used by clustering.
    int history_draws = 50;

    void validate() const
    {
        detail::require(rows > 0 && cols > 0, "TrafficGridConfig: grid must be non-empty");
        detail::require(!modes.empty(), "TrafficGridConfig: need at least one mode");
        detail::require(!templates.empty(), "TrafficGridConfig: need at least one template");
        detail::require(static_cast<int>(templates.size()) <= rows * cols, "TrafficGridConfig: more templates than cells");
        for (const auto& t : templates) {
            detail::require(t.size() == modes.size(), "TrafficGridConfig: template length must match modes");
        }
        detail::require(history_draws >= 1, "TrafficGridConfig: history_draws must be >= 1");
    }
};

struct TrafficGrid {
    /// One variable ("travel_time"), one stage, clusters = templates.
    BeliefMap beliefs;
    std::vector<MultimodalMixture> mixtures;
    std::vector<int> template_of;
    /// Realized travel time per cell.
    std::vector<double> truth;
    /// Historical draw counts per cell over `modes`.
    std::vector<Histogram> history;
};

/// A template as a mixture with one point-mass component per used mode.
inline MultimodalMixture template_mixture(const std::vector<double>& weights, const std::vector<double>& modes)
{
    std::vector<MultimodalMixture::Component> parts;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        if (weights[m] > 0.0) {
            std::vector<double> one_hot(modes.size(), 0.0);
            one_hot[m] = 1.0;
            parts.push_back({weights[m], CategoricalDistribution(one_hot, modes)});
        }
    }
    return MultimodalMixture(std::move(parts));
}

inline TrafficGrid gen_traffic_grid(const TrafficGridConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Rng rng(seed);
    const int k = static_cast<int>(cfg.templates.size());
    TrafficGrid out{BeliefMap(cfg.rows, cfg.cols, {"travel_time"}, 1), {}, {}, {}, {}};
    out.template_of = voronoi_regions(cfg.rows, cfg.cols, k, rng);
    out.beliefs.set_joint_clusters(out.template_of);

    std::vector<double> entropy;
    for (const auto& t : cfg.templates) {
        entropy.push_back(entropy_percent(template_mixture(t, cfg.modes).flatten().probs()));
    }
    out.beliefs.set_cluster_entropy(entropy);

    for (int cell = 0; cell < cfg.rows * cfg.cols; ++cell) {
        const auto& w = cfg.templates[static_cast<std::size_t>(out.template_of[static_cast<std::size_t>(cell)])];
        auto mix = template_mixture(w, cfg.modes);
        const auto flat = mix.flatten();
        out.beliefs.set(cell, 0, 0, flat.mean(), flat.variance());
        out.truth.push_back(cfg.modes[rng.categorical(flat.probs())]);
        Histogram h(cfg.modes.size(), 0.0);
        for (int d = 0; d < cfg.history_draws; ++d) {
            h[rng.categorical(flat.probs())] += 1.0;
        }
        out.history.push_back(std::move(h));
        out.mixtures.push_back(std::move(mix));
    }
    return out;
}

} // namespace tmml
