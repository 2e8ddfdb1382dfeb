#pragma once

// Joint clustering of cells over all variables and stages at once.

#include <tmml/belief.hpp>
#include <tmml/kmeans.hpp>
#include <tmml/mixture.hpp>

#include <span>
#include <vector>

namespace tmml {

/// One row per cell: (mean, variance) for every variable and stage.
inline PointSet joint_features(const BeliefMap& beliefs)
{
    const int nv = static_cast<int>(beliefs.variable_count());
    std::vector<double> flat;
    flat.reserve(beliefs.cell_count() * static_cast<std::size_t>(nv * beliefs.stages() * 2));
    for (int c = 0; c < static_cast<int>(beliefs.cell_count()); ++c) {
        for (int v = 0; v < nv; ++v) {
            for (int t = 0; t < beliefs.stages(); ++t) {
                flat.push_back(beliefs.mean(c, v, t));
                flat.push_back(beliefs.variance(c, v, t));
            }
        }
    }
    return {static_cast<std::size_t>(nv * beliefs.stages() * 2), std::move(flat)};
}

namespace detail {

inline ClusterAssignment hard_assignment(const std::vector<int>& labels, int k_count)
{
    ClusterAssignment a;
    a.labels = labels;
    for (int l : labels) {
        std::vector<double> r(static_cast<std::size_t>(k_count), 0.0);
        r[static_cast<std::size_t>(l)] = 1.0;
        a.responsibilities.push_back(std::move(r));
    }
    return a;
}

} // namespace detail

/// K-means with K clusters on standardized joint features. Responsibilities
/// are one-hot.
inline ClusterAssignment assign_temporal_multivariate(const BeliefMap& beliefs, int k_count, std::uint64_t seed,
                                                      const KMeansOptions& options = {})
{
    detail::require(beliefs.cell_count() > 0, "assign_temporal_multivariate: empty map");
    const auto result = kmeans(joint_features(beliefs).standardized(), k_count, seed, options);
    return detail::hard_assignment(result.labels, k_count);
}

/// Same, with K chosen by the gap statistic over `k_range`.
inline ClusterAssignment assign_temporal_multivariate(const BeliefMap& beliefs, std::span<const int> k_range,
                                                      std::uint64_t seed, const GapOptions& options = {})
{
    detail::require(!k_range.empty(), "assign_temporal_multivariate: empty k_range");
    const auto gap = kmeans_gap(joint_features(beliefs).standardized(), k_range, seed, options);
    return detail::hard_assignment(gap.labels, gap.best_k);
}

} // namespace tmml
