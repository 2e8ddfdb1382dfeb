#pragma once

// Fusing observations into a BeliefMap. An observation updates its own cell
// directly, nearby cells through an influence radius, and same-cluster cells
// (other locations, stages and variables) through a sequential weight that
// shrinks as the cluster collects samples.

#include <tmml/belief.hpp>
#include <tmml/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace tmml {

struct Observation {
    int cell = 0;
    int variable = 0;
    int stage = 0;
    double value = 0.0;
    double variance = 0.0; ///< sensor variance, known a priori
};

struct Estimate {
    double mean = 0.0;
    double variance = 0.0;
};

/// Weight given to the observation: var_pred / (var_pred + var_obs).
inline double fuse_weight(double var_pred, double var_obs)
{
    detail::require(var_pred >= 0.0 && var_obs >= 0.0, "fuse_weight: variances must be >= 0");
    if (std::isinf(var_obs)) {
        return 0.0;
    }
    const double total = var_pred + var_obs;
    if (!(total > 0.0)) {
        throw NumericError("fuse_weight: prediction and observation variances are both zero");
    }
    return var_pred / total;
}

inline Estimate best_estimate(double mean_pred, double var_pred, const Observation& obs)
{
    const double beta = fuse_weight(var_pred, obs.variance);
    return {(1.0 - beta) * mean_pred + beta * obs.value, (1.0 - beta) * var_pred};
}

/// max(0, (R^2 - d^2) / (R^2 + d^2)).
inline double influence_weight(double distance, double radius)
{
    detail::require(radius > 0.0, "influence_weight: radius must be positive");
    detail::require(distance >= 0.0, "influence_weight: distance must be >= 0");
    const double r2 = radius * radius;
    const double d2 = distance * distance;
    return std::max(0.0, (r2 - d2) / (r2 + d2));
}

/// 1 / (1 + o): full weight for a cluster's first observation.
inline double sequential_weight(int observations)
{
    detail::require(observations >= 0, "sequential_weight: negative observation count");
    return 1.0 / (1.0 + static_cast<double>(observations));
}

/// Which indirect channels an observation may use.
struct PropagationPolicy {
    double radius = 2.0;
    bool cluster_propagation = true;
    /// Propagate to every stage of same-cluster cells, not only the
    /// observation's own stage.
    bool across_stages = true;
    /// Row-major [observed variable][target variable] factor scaling the
    /// cluster update. Empty means 1 for every pair.
    std::vector<double> variable_weights;
    /// Clusters whose entropy percentage exceeds this need `min_samples`
    /// member observations before cluster-wide updates apply.
    double entropy_threshold = 100.0;
    int min_samples = 3;

    double variable_weight(std::size_t observed, std::size_t target, std::size_t nvars) const
    {
        return variable_weights.empty() ? 1.0 : variable_weights[observed * nvars + target];
    }
};

struct ObservationOutcome {
    double beta = 0.0;
    Estimate fused;
    bool cluster_update_applied = false;
};

/// Applies one observation in place. Radius updates run before cluster
/// updates; no variance ever increases.
inline ObservationOutcome apply_observation(BeliefMap& map, const Observation& obs, const PropagationPolicy& policy = {})
{
    if (!map.contains(obs.cell)) {
        throw ValidationError("apply_observation: unknown cell id " + std::to_string(obs.cell));
    }
    detail::require(obs.variable >= 0 && static_cast<std::size_t>(obs.variable) < map.variable_count(),
                    "apply_observation: unknown variable");
    detail::require(obs.stage >= 0 && obs.stage < map.stages(), "apply_observation: unknown stage");
    detail::require(obs.variance >= 0.0, "apply_observation: observation variance must be >= 0");
    detail::require(policy.radius > 0.0, "apply_observation: radius must be positive");

    const int x = obs.variable;
    const int t = obs.stage;
    const double prior_var = map.variance(obs.cell, x, t);
    ObservationOutcome out;
    out.beta = fuse_weight(prior_var, obs.variance);
    out.fused = best_estimate(map.mean(obs.cell, x, t), prior_var, obs);
    map.set(obs.cell, x, t, out.fused.mean, out.fused.variance);

    const GridPos here = map.position(obs.cell);
    const int reach = static_cast<int>(std::ceil(policy.radius));
    for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
            const GridPos p{here.row + dr, here.col + dc};
            if ((dr == 0 && dc == 0) || !map.contains(p)) {
                continue;
            }
            const double w = influence_weight(std::hypot(dr, dc), policy.radius);
            if (w <= 0.0) {
                continue;
            }
            const int j = map.cell_id(p);
            map.set_variance(j, x, t, (1.0 - out.beta * w) * map.variance(j, x, t));
        }
    }

    const int cluster = map.cluster(obs.cell, x);
    const int seen = map.observation_count(cluster);
    map.record_observation(cluster);
    if (!policy.cluster_propagation) {
        return out;
    }
    const bool explore = map.cluster_entropy(cluster) > policy.entropy_threshold;
    if (explore && seen + 1 < policy.min_samples) {
        return out;
    }
    const double gain = out.beta * sequential_weight(seen);
    if (gain <= 0.0) {
        return out;
    }
    out.cluster_update_applied = true;
    const std::size_t nv = map.variable_count();
    const int t_lo = policy.across_stages ? 0 : t;
    const int t_hi = policy.across_stages ? map.stages() - 1 : t;
    for (int j = 0; j < static_cast<int>(map.cell_count()); ++j) {
        if (j == obs.cell || map.cluster(j, x) != cluster) {
            continue;
        }
        for (std::size_t y = 0; y < nv; ++y) {
            const double wy = policy.variable_weight(static_cast<std::size_t>(x), y, nv);
            if (wy <= 0.0) {
                continue;
            }
            const double factor = 1.0 - gain * std::min(1.0, wy);
            for (int s = t_lo; s <= t_hi; ++s) {
                const int yi = static_cast<int>(y);
                map.set_variance(j, yi, s, factor * map.variance(j, yi, s));
            }
        }
    }
    return out;
}

/// Functional form of apply_observation.
inline BeliefMap applied(BeliefMap map, const Observation& obs, const PropagationPolicy& policy = {})
{
    apply_observation(map, obs, policy);
    return map;
}

/// 100 * (total variance before - after) / total variance before.
inline double improvement_percent(const BeliefMap& before, const BeliefMap& after)
{
    detail::require(before.same_shape(after), "improvement_percent: maps differ in shape");
    const double b = before.total_variance();
    if (!(b > 0.0)) {
        throw NumericError("improvement_percent: zero total prior variance");
    }
    return 100.0 * (b - after.total_variance()) / b;
}

} // namespace tmml
