#pragma once

// Lloyd k-means with k-means++ seeding and the gap statistic for picking K.

#include <tmml/error.hpp>
#include <tmml/probability.hpp>
#include <tmml/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tmml {

/// Row-major point matrix.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t dims, std::vector<double> data)
        : dims_(dims), data_(std::move(data))
    {
        detail::require(dims > 0, "PointSet: zero dimensions");
        detail::require(data_.size() % dims == 0, "PointSet: data is not a whole number of rows");
    }

    static PointSet from_rows(const std::vector<std::vector<double>>& rows)
    {
        detail::require(!rows.empty(), "PointSet: no rows");
        std::vector<double> flat;
        flat.reserve(rows.size() * rows.front().size());
        for (const auto& r : rows) {
            detail::require(r.size() == rows.front().size(), "PointSet: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return {rows.front().size(), std::move(flat)};
    }

    std::size_t size() const noexcept { return dims_ == 0 ? 0 : data_.size() / dims_; }
    std::size_t dims() const noexcept { return dims_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * dims_, dims_}; }

    /// Per-dimension z-scores; constant dimensions become zero.
    PointSet standardized() const
    {
        PointSet out = *this;
        const std::size_t n = size();
        for (std::size_t d = 0; d < dims_; ++d) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mean += row(i)[d];
            }
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                var += (row(i)[d] - mean) * (row(i)[d] - mean);
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            for (std::size_t i = 0; i < n; ++i) {
                out.row(i)[d] = sd > 0.0 ? (row(i)[d] - mean) / sd : 0.0;
            }
        }
        return out;
    }

private:
    std::size_t dims_ = 0;
    std::vector<double> data_;
};

struct KMeansResult {
    std::vector<int> labels;
    PointSet centres;
    double inertia = 0.0;
};

struct KMeansOptions {
    int n_init = 5;
    int max_iter = 100;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        d += x * x;
    }
    return d;
}

inline KMeansResult kmeans_once(const PointSet& points, int k_count, Rng& rng, int max_iter)
{
    const std::size_t n = points.size();
    const std::size_t dims = points.dims();
    const std::size_t kc = static_cast<std::size_t>(k_count);

    std::vector<double> centres;
    centres.reserve(kc * dims);
    auto push_centre = [&](std::size_t i) {
        const auto r = points.row(i);
        centres.insert(centres.end(), r.begin(), r.end());
    };
    push_centre(rng.index(n));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centres.size() < kc * dims) {
        const std::span<const double> last(centres.data() + centres.size() - dims, dims);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(points.row(i), last));
            total += d2[i];
        }
        push_centre(total > 0.0 ? rng.categorical(d2) : rng.index(n));
    }

    std::vector<int> labels(n, -1);
    double inertia = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < kc; ++k) {
                const double d = sq_dist(points.row(i), {centres.data() + k * dims, dims});
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(k);
                }
            }
            inertia += best_d;
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        std::vector<double> sums(kc * dims, 0.0);
        std::vector<std::size_t> counts(kc, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(labels[i]);
            ++counts[k];
            const auto r = points.row(i);
            for (std::size_t d = 0; d < dims; ++d) {
                sums[k * dims + d] += r[d];
            }
        }
        for (std::size_t k = 0; k < kc; ++k) {
            // Empty clusters keep their previous centre.
            if (counts[k] == 0) {
                continue;
            }
            for (std::size_t d = 0; d < dims; ++d) {
                centres[k * dims + d] = sums[k * dims + d] / static_cast<double>(counts[k]);
            }
        }
    }
    return {std::move(labels), PointSet(dims, std::move(centres)), inertia};
}

} // namespace detail

/// Best of `n_init` k-means++ runs by inertia (ties to the earliest run).
inline KMeansResult kmeans(const PointSet& points, int k_count, std::uint64_t seed, const KMeansOptions& options = {})
{
    detail::require(points.size() > 0, "kmeans: no points");
    detail::require(k_count >= 1, "kmeans: K must be at least 1");
    detail::require(static_cast<std::size_t>(k_count) <= points.size(), "kmeans: K exceeds number of points");
    KMeansResult best;
    bool have = false;
    for (int run = 0; run < std::max(1, options.n_init); ++run) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(run));
        KMeansResult r = detail::kmeans_once(points, k_count, rng, options.max_iter);
        if (!have || r.inertia < best.inertia) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

/// Per-item entropy and expected value; entropy as a percentage of its
/// maximum so both axes have comparable scale.
struct EntropyFeature {
    std::string id;
    double entropy_percent = 0.0;
    double expected_value = 0.0;
};

inline EntropyFeature make_entropy_feature(std::string id, const CategoricalDistribution& d)
{
    return {std::move(id), entropy_percent(d.probs()), d.mean()};
}

struct GapResult {
    int best_k = 1;
    std::vector<int> labels;
    std::vector<int> k_values;
    std::vector<double> gap;
    std::vector<double> gap_sd; ///< s_k = sd_k * sqrt(1 + 1/B)
};

struct GapOptions {
    int references = 20;
    KMeansOptions kmeans{};
};

/// Chooses K maximizing log(W_ref) - log(W_data) against uniform reference
/// sets drawn over the data's bounding box. Zero within-cluster dispersion
/// counts as an infinite gap, so identical points pick the smallest K.
inline GapResult kmeans_gap(const PointSet& points, std::span<const int> k_range, std::uint64_t seed,
                            const GapOptions& options = {})
{
    const std::size_t n = points.size();
    detail::require(n >= 2, "kmeans_gap: needs at least two points");
    detail::require(!k_range.empty(), "kmeans_gap: empty k_range");
    detail::require(options.references >= 1, "kmeans_gap: needs at least one reference set");
    std::vector<int> ks(k_range.begin(), k_range.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) {
        detail::require(k >= 1 && static_cast<std::size_t>(k) <= n, "kmeans_gap: k_range exceeds item count");
    }

    const std::size_t dims = points.dims();
    std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dims; ++d) {
            lo[d] = std::min(lo[d], points.row(i)[d]);
            hi[d] = std::max(hi[d], points.row(i)[d]);
        }
    }

    std::vector<PointSet> references;
    Rng ref_rng = Rng::derive(seed, 0xfeed);
    for (int b = 0; b < options.references; ++b) {
        std::vector<double> flat(n * dims);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dims; ++d) {
                flat[i * dims + d] = ref_rng.uniform(lo[d], hi[d]);
            }
        }
        references.emplace_back(dims, std::move(flat));
    }

    GapResult out;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (int k : ks) {
        const std::uint64_t k_seed = Rng::derive(seed, static_cast<std::uint64_t>(k)).next();
        KMeansResult fit = kmeans(points, k, k_seed, options.kmeans);
        double sum_log = 0.0;
        std::vector<double> logs;
        for (std::size_t b = 0; b < references.size(); ++b) {
            const double w = kmeans(references[b], k, k_seed + b + 1, options.kmeans).inertia;
            logs.push_back(std::log(std::max(w, std::numeric_limits<double>::min())));
            sum_log += logs.back();
        }
        const double mean_log = sum_log / static_cast<double>(logs.size());
        double var = 0.0;
        for (double l : logs) {
            var += (l - mean_log) * (l - mean_log);
        }
        var /= static_cast<double>(logs.size());
        const double gap = fit.inertia > 0.0 ? mean_log - std::log(fit.inertia)
                                             : std::numeric_limits<double>::infinity();
        out.k_values.push_back(k);
        out.gap.push_back(gap);
        out.gap_sd.push_back(std::sqrt(var) * std::sqrt(1.0 + 1.0 / static_cast<double>(logs.size())));
        if (gap > best_gap) {
            best_gap = gap;
            out.best_k = k;
            out.labels = std::move(fit.labels);
        }
    }
    return out;
}

inline GapResult kmeans_gap(std::span<const EntropyFeature> features, std::span<const int> k_range,
                            std::uint64_t seed, const GapOptions& options = {})
{
    detail::require(features.size() >= 2, "kmeans_gap: needs at least two features");
    std::vector<double> flat;
    flat.reserve(features.size() * 2);
    for (const auto& f : features) {
        flat.push_back(f.entropy_percent);
        flat.push_back(f.expected_value);
    }
    return kmeans_gap(PointSet(2, std::move(flat)), k_range, seed, options);
}

} // namespace tmml
