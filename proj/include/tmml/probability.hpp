#pragma once

// Discrete distributions and the information measures built on them.
// Every measure is reported in bits.

#include <tmml/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tmml {

inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kRenormTolerance = 1e-6;

namespace detail {

// Validates entries in [0,1] and a total within kRenormTolerance of one,
// then rescales so the total is exactly one up to rounding.
inline std::vector<double> normalized_masses(std::vector<double> probs, const char* what)
{
    require(!probs.empty(), std::string(what) + ": needs at least one entry");
    double total = 0.0;
    for (double p : probs) {
        require(std::isfinite(p) && p >= 0.0 && p <= 1.0 + kRenormTolerance,
                std::string(what) + ": probability outside [0,1]");
        total += p;
    }
    require(std::abs(total - 1.0) <= kRenormTolerance,
            std::string(what) + ": probabilities do not sum to 1");
    if (total != 1.0) {
        for (double& p : probs) {
            p /= total;
        }
    }
    return probs;
}

inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

} // namespace detail

/// Probability mass over discrete outcome categories, each carrying a value
/// (travel time in minutes, a bin centre, ...).
class CategoricalDistribution {
public:
    explicit CategoricalDistribution(std::vector<double> probs)
        : probs_(detail::normalized_masses(std::move(probs), "CategoricalDistribution"))
    {
        values_.resize(probs_.size());
        std::iota(values_.begin(), values_.end(), 0.0);
    }

    CategoricalDistribution(std::vector<double> probs, std::vector<double> values)
        : probs_(detail::normalized_masses(std::move(probs), "CategoricalDistribution"))
        , values_(std::move(values))
    {
        detail::require(values_.size() == probs_.size(),
                        "CategoricalDistribution: probs and category_values differ in length");
    }

    static CategoricalDistribution uniform(std::size_t n)
    {
        detail::require(n > 0, "CategoricalDistribution: uniform over zero categories");
        return CategoricalDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    std::size_t size() const noexcept { return probs_.size(); }
    std::span<const double> probs() const noexcept { return probs_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return probs_[i]; }

    double mean() const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            m += probs_[i] * values_[i];
        }
        return m;
    }

    double variance() const
    {
        const double m = mean();
        double v = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            v += probs_[i] * (values_[i] - m) * (values_[i] - m);
        }
        return v;
    }

private:
    std::vector<double> probs_;
    std::vector<double> values_;
};

/// Weighted combination of categorical distributions over a shared category
/// set. Components may peak in different places.
class MultimodalMixture {
public:
    struct Component {
        double weight;
        CategoricalDistribution dist;
    };

    explicit MultimodalMixture(std::vector<Component> components)
        : components_(std::move(components))
    {
        detail::require(!components_.empty(), "MultimodalMixture: needs at least one component");
        std::vector<double> weights;
        weights.reserve(components_.size());
        for (const auto& c : components_) {
            weights.push_back(c.weight);
            detail::require(c.dist.size() == components_.front().dist.size(),
                            "MultimodalMixture: components use different category sets");
        }
        weights = detail::normalized_masses(std::move(weights), "MultimodalMixture weights");
        for (std::size_t i = 0; i < components_.size(); ++i) {
            components_[i].weight = weights[i];
        }
    }

    std::span<const Component> components() const noexcept { return components_; }

    /// Collapses the mixture to a single categorical distribution.
    CategoricalDistribution flatten() const
    {
        const auto& first = components_.front().dist;
        std::vector<double> probs(first.size(), 0.0);
        for (const auto& c : components_) {
            for (std::size_t i = 0; i < probs.size(); ++i) {
                probs[i] += c.weight * c.dist[i];
            }
        }
        return {std::move(probs), std::vector<double>(first.values().begin(), first.values().end())};
    }

private:
    std::vector<Component> components_;
};

/// Joint mass function over (x-category, y-category), row-major.
class JointDistribution {
public:
    JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> table)
        : rows_(rows), cols_(cols)
    {
        detail::require(rows > 0 && cols > 0, "JointDistribution: empty table");
        detail::require(table.size() == rows * cols, "JointDistribution: table size mismatch");
        table_ = detail::normalized_masses(std::move(table), "JointDistribution");
    }

    JointDistribution(const std::vector<std::vector<double>>& rows)
        : JointDistribution(rows.size(), rows.empty() ? 0 : rows.front().size(), flatten(rows))
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t x, std::size_t y) const { return table_[x * cols_ + y]; }

    std::vector<double> x_marginal() const
    {
        std::vector<double> m(rows_, 0.0);
        for (std::size_t x = 0; x < rows_; ++x) {
            for (std::size_t y = 0; y < cols_; ++y) {
                m[x] += (*this)(x, y);
            }
        }
        return m;
    }

    std::vector<double> y_marginal() const
    {
        std::vector<double> m(cols_, 0.0);
        for (std::size_t x = 0; x < rows_; ++x) {
            for (std::size_t y = 0; y < cols_; ++y) {
                m[y] += (*this)(x, y);
            }
        }
        return m;
    }

    JointDistribution transposed() const
    {
        std::vector<double> t(table_.size());
        for (std::size_t x = 0; x < rows_; ++x) {
            for (std::size_t y = 0; y < cols_; ++y) {
                t[y * rows_ + x] = (*this)(x, y);
            }
        }
        return {cols_, rows_, std::move(t)};
    }

private:
    static std::vector<double> flatten(const std::vector<std::vector<double>>& rows)
    {
        std::vector<double> out;
        for (const auto& r : rows) {
            detail::require(r.size() == rows.front().size(), "JointDistribution: ragged rows");
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> table_;
};

/// Mass over (category, time stage) for one cluster type; sums to one over
/// both indices jointly.
class ClusterCategoryTensor {
public:
    ClusterCategoryTensor(std::size_t categories, std::size_t stages, std::vector<double> p)
        : categories_(categories), stages_(stages)
    {
        detail::require(categories > 0 && stages > 0, "ClusterCategoryTensor: empty tensor");
        detail::require(p.size() == categories * stages, "ClusterCategoryTensor: size mismatch");
        p_ = detail::normalized_masses(std::move(p), "ClusterCategoryTensor");
    }

    std::size_t categories() const noexcept { return categories_; }
    std::size_t stages() const noexcept { return stages_; }
    std::span<const double> values() const noexcept { return p_; }
    double operator()(std::size_t k, std::size_t t) const { return p_[t * categories_ + k]; }

private:
    std::size_t categories_;
    std::size_t stages_;
    std::vector<double> p_;
};

inline double shannon_entropy(std::span<const double> probs)
{
    double h = 0.0;
    for (double p : probs) {
        h -= detail::plogp(p);
    }
    return h;
}

inline double shannon_entropy(const CategoricalDistribution& d) { return shannon_entropy(d.probs()); }

/// D_KL(p || q) in bits. Throws SupportMismatchError where q = 0 < p.
inline double kl_divergence(std::span<const double> p, std::span<const double> q)
{
    detail::require(p.size() == q.size(), "kl_divergence: category sets differ");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) {
            continue;
        }
        if (q[i] <= 0.0) {
            throw SupportMismatchError("kl_divergence: q is zero where p has mass (category "
                                       + std::to_string(i) + ")");
        }
        d += p[i] * std::log2(p[i] / q[i]);
    }
    // Rounding can leave a tiny negative residue when p == q.
    return std::max(d, 0.0);
}

inline double kl_divergence(const CategoricalDistribution& p, const CategoricalDistribution& q)
{
    return kl_divergence(p.probs(), q.probs());
}

/// Mutual information as the KL divergence of the joint from the product of
/// its marginals.
inline double mutual_information(const JointDistribution& j)
{
    const auto px = j.x_marginal();
    const auto py = j.y_marginal();
    double mi = 0.0;
    for (std::size_t x = 0; x < j.rows(); ++x) {
        for (std::size_t y = 0; y < j.cols(); ++y) {
            const double pxy = j(x, y);
            if (pxy > 0.0) {
                mi += pxy * std::log2(pxy / (px[x] * py[y]));
            }
        }
    }
    return std::max(mi, 0.0);
}

/// Mutual information as E_Y[ D_KL(p_{X|Y} || p_X) ]. Columns with zero
/// y-mass contribute nothing.
inline double mutual_information_via_expected_kl(const JointDistribution& j)
{
    const auto px = j.x_marginal();
    const auto py = j.y_marginal();
    std::vector<double> conditional(j.rows());
    double mi = 0.0;
    for (std::size_t y = 0; y < j.cols(); ++y) {
        if (py[y] <= 0.0) {
            continue;
        }
        for (std::size_t x = 0; x < j.rows(); ++x) {
            conditional[x] = j(x, y) / py[y];
        }
        mi += py[y] * kl_divergence(conditional, px);
    }
    return mi;
}

/// Entropy of a cluster's category-by-stage tensor, in bits.
inline double cluster_entropy(const ClusterCategoryTensor& tensor) { return shannon_entropy(tensor.values()); }

/// Entropy as a percentage of the maximum log2(n).
inline double entropy_percent(std::span<const double> probs)
{
    if (probs.size() <= 1) {
        return 0.0;
    }
    return 100.0 * shannon_entropy(probs) / std::log2(static_cast<double>(probs.size()));
}

inline double entropy_percent(const ClusterCategoryTensor& tensor) { return entropy_percent(tensor.values()); }

} // namespace tmml
