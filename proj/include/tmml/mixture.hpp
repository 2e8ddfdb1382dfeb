#pragma once

// Multinomial mixture models fitted by expectation maximization, with BIC
// model selection over the component count.

#include <tmml/error.hpp>
#include <tmml/probability.hpp>
#include <tmml/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tmml {

/// One item's observation counts over the shared category set. Counts may be
/// fractional (pseudo-counts from ensemble probabilities).
using Histogram = std::vector<double>;

struct MixtureModel {
    std::vector<double> alpha;
    std::vector<CategoricalDistribution> beta;

    int components() const noexcept { return static_cast<int>(alpha.size()); }
    std::size_t categories() const noexcept { return beta.empty() ? 0 : beta.front().size(); }
};

struct ClusterAssignment {
    std::vector<int> labels;
    std::vector<std::vector<double>> responsibilities;

    std::size_t size() const noexcept { return labels.size(); }
    double max_responsibility(std::size_t item) const { return responsibilities[item][labels[item]]; }
};

struct EmOptions {
    int max_iter = 500;
    double tol = 1e-6;
    int n_restarts = 10;
};

struct EmResult {
    MixtureModel model;
    ClusterAssignment assignment;
    std::vector<double> log_likelihood_trace;

    double log_likelihood() const { return log_likelihood_trace.back(); }
};

namespace detail {

inline std::size_t validate_histograms(std::span<const Histogram> data)
{
    require(!data.empty(), "em: empty data");
    const std::size_t categories = data.front().size();
    require(categories > 0, "em: histograms have no categories");
    for (const auto& h : data) {
        require(h.size() == categories, "em: histograms use different category sets");
        double total = 0.0;
        for (double c : h) {
            require(std::isfinite(c) && c >= 0.0, "em: negative or non-finite count");
            total += c;
        }
        require(total > 0.0, "em: empty histogram");
    }
    return categories;
}

// log of the multinomial coefficient n! / prod(n_c!), valid for real counts.
inline double log_multinomial_coefficient(const Histogram& h)
{
    double n = 0.0;
    double denom = 0.0;
    for (double c : h) {
        n += c;
        denom += std::lgamma(c + 1.0);
    }
    return std::lgamma(n + 1.0) - denom;
}

inline std::vector<double> frequencies(const Histogram& h)
{
    double total = 0.0;
    for (double c : h) {
        total += c;
    }
    std::vector<double> f(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        f[i] = h[i] / total;
    }
    return f;
}

inline std::vector<double> pooled_frequencies(std::span<const Histogram> data)
{
    std::vector<double> pooled(data.front().size(), 0.0);
    double total = 0.0;
    for (const auto& h : data) {
        for (std::size_t c = 0; c < h.size(); ++c) {
            pooled[c] += h[c];
            total += h[c];
        }
    }
    for (double& p : pooled) {
        p /= total;
    }
    return pooled;
}

inline double log_sum_exp(std::span<const double> v)
{
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        hi = std::max(hi, x);
    }
    if (!std::isfinite(hi)) {
        return hi;
    }
    double s = 0.0;
    for (double x : v) {
        s += std::exp(x - hi);
    }
    return hi + std::log(s);
}

// Per-item, per-component joint log density log(alpha_k) + log P(x_i | beta_k).
class ComponentLogDensity {
public:
    ComponentLogDensity(std::span<const Histogram> data)
        : data_(data)
    {
        log_coef_.reserve(data.size());
        for (const auto& h : data) {
            log_coef_.push_back(log_multinomial_coefficient(h));
        }
    }

    void evaluate(const std::vector<double>& alpha, const std::vector<std::vector<double>>& beta,
                  std::vector<double>& out) const
    {
        const std::size_t n = data_.size();
        const std::size_t k_count = alpha.size();
        const std::size_t categories = beta.front().size();
        out.assign(n * k_count, 0.0);
        std::vector<double> log_beta(categories);
        for (std::size_t k = 0; k < k_count; ++k) {
            const double log_alpha = alpha[k] > 0.0 ? std::log(alpha[k]) : -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < categories; ++c) {
                log_beta[c] = beta[k][c] > 0.0 ? std::log(beta[k][c]) : -std::numeric_limits<double>::infinity();
            }
            for (std::size_t i = 0; i < n; ++i) {
                double s = log_coef_[i] + log_alpha;
                const auto& h = data_[i];
                for (std::size_t c = 0; c < categories; ++c) {
                    if (h[c] > 0.0) {
                        s += h[c] * log_beta[c];
                    }
                }
                out[i * k_count + k] = s;
            }
        }
    }

private:
    std::span<const Histogram> data_;
    std::vector<double> log_coef_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return d;
}

// k-means++ seeding over normalized histograms; returns the initial hard
// assignment (ties to the lowest centre index).
inline std::vector<int> kmeanspp_labels(const std::vector<std::vector<double>>& points, int k_count, Rng& rng)
{
    const std::size_t n = points.size();
    std::vector<std::size_t> centres;
    centres.push_back(rng.index(n));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centres.size()) < k_count) {
        const auto& last = points[centres.back()];
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], last));
            total += d2[i];
        }
        centres.push_back(total > 0.0 ? rng.categorical(d2) : rng.index(n));
    }
    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_count; ++k) {
            const double d = squared_distance(points[i], points[centres[k]]);
            if (d < best) {
                best = d;
                labels[i] = k;
            }
        }
    }
    return labels;
}

inline ClusterAssignment assignment_from(std::vector<std::vector<double>> resp)
{
    ClusterAssignment a;
    a.labels.reserve(resp.size());
    for (const auto& row : resp) {
        a.labels.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
    a.responsibilities = std::move(resp);
    return a;
}

} // namespace detail

/// Total data log-likelihood under the model, multinomial coefficients
/// included.
inline double log_likelihood(const MixtureModel& model, std::span<const Histogram> data)
{
    detail::validate_histograms(data);
    detail::require(model.categories() == data.front().size(), "log_likelihood: category mismatch");
    std::vector<std::vector<double>> beta;
    for (const auto& b : model.beta) {
        beta.emplace_back(b.probs().begin(), b.probs().end());
    }
    std::vector<double> dens;
    detail::ComponentLogDensity(data).evaluate(model.alpha, beta, dens);
    const std::size_t k_count = model.alpha.size();
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ll += detail::log_sum_exp(std::span<const double>(dens).subspan(i * k_count, k_count));
    }
    return ll;
}

/// One EM run from a k-means++ start. The log-likelihood trace is recorded
/// per iteration and is non-decreasing up to rounding.
inline EmResult em_fit(std::span<const Histogram> data, int k_count, std::uint64_t seed, int max_iter = 500,
                       double tol = 1e-6)
{
    const std::size_t categories = detail::validate_histograms(data);
    detail::require(k_count >= 1, "em_fit: K must be at least 1");
    detail::require(static_cast<std::size_t>(k_count) <= data.size(), "em_fit: K exceeds number of items");
    detail::require(max_iter >= 1, "em_fit: max_iter must be positive");

    const std::size_t n = data.size();
    const std::size_t kc = static_cast<std::size_t>(k_count);
    const auto pooled = detail::pooled_frequencies(data);

    std::vector<std::vector<double>> normalized;
    normalized.reserve(n);
    for (const auto& h : data) {
        normalized.push_back(detail::frequencies(h));
    }
    Rng rng(seed);
    const auto init_labels = detail::kmeanspp_labels(normalized, k_count, rng);

    std::vector<double> resp(n * kc, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        resp[i * kc + static_cast<std::size_t>(init_labels[i])] = 1.0;
    }

    std::vector<double> alpha(kc, 0.0);
    std::vector<std::vector<double>> beta(kc, pooled);

    auto m_step = [&] {
        for (std::size_t k = 0; k < kc; ++k) {
            double weight = 0.0;
            std::vector<double> mass(categories, 0.0);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = resp[i * kc + k];
                if (r <= 0.0) {
                    continue;
                }
                weight += r;
                for (std::size_t c = 0; c < categories; ++c) {
                    mass[c] += r * data[i][c];
                }
            }
            alpha[k] = weight / static_cast<double>(n);
            for (double m : mass) {
                total += m;
            }
            if (total > 0.0) {
                for (std::size_t c = 0; c < categories; ++c) {
                    beta[k][c] = mass[c] / total;
                }
            }
            // An empty component keeps its previous parameters (initially the
            // pooled frequencies) with zero weight.
        }
    };

    detail::ComponentLogDensity density(data);
    std::vector<double> dens;
    std::vector<double> trace;

    m_step();
    for (int iter = 0; iter < max_iter; ++iter) {
        density.evaluate(alpha, beta, dens);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const double> row(dens.data() + i * kc, kc);
            const double lse = detail::log_sum_exp(row);
            ll += lse;
            for (std::size_t k = 0; k < kc; ++k) {
                resp[i * kc + k] = std::exp(row[k] - lse);
            }
        }
        trace.push_back(ll);
        if (trace.size() >= 2 && std::abs(trace.back() - trace[trace.size() - 2]) < tol) {
            break;
        }
        m_step();
    }

    EmResult result;
    for (std::size_t k = 0; k < kc; ++k) {
        result.model.beta.emplace_back(beta[k]);
    }
    double alpha_total = 0.0;
    for (double a : alpha) {
        alpha_total += a;
    }
    for (double a : alpha) {
        result.model.alpha.push_back(a / alpha_total);
    }

    std::vector<std::vector<double>> rows(n, std::vector<double>(kc));
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < kc; ++k) {
            s += resp[i * kc + k];
        }
        for (std::size_t k = 0; k < kc; ++k) {
            rows[i][k] = resp[i * kc + k] / s;
        }
    }
    result.assignment = detail::assignment_from(std::move(rows));
    result.log_likelihood_trace = std::move(trace);
    return result;
}

/// Best of several seeded restarts by final log-likelihood (ties to the
/// earliest restart).
inline EmResult em_fit_best(std::span<const Histogram> data, int k_count, std::uint64_t seed,
                            const EmOptions& options = {})
{
    detail::require(options.n_restarts >= 1, "em_fit_best: n_restarts must be positive");
    EmResult best;
    bool have = false;
    for (int r = 0; r < options.n_restarts; ++r) {
        const std::uint64_t run_seed = Rng::derive(seed, static_cast<std::uint64_t>(r)).next();
        EmResult candidate = em_fit(data, k_count, run_seed, options.max_iter, options.tol);
        if (!have || candidate.log_likelihood() > best.log_likelihood()) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

/// Free parameters of a K-component mixture over `categories` outcomes.
inline int free_parameters(int k_count, std::size_t categories)
{
    return (k_count - 1) + k_count * (static_cast<int>(categories) - 1);
}

inline double bic(double free_params, double observations, double log_likelihood)
{
    return free_params * std::log(observations) - 2.0 * log_likelihood;
}

/// BIC with N taken as the number of items.
inline double bic(const MixtureModel& model, std::span<const Histogram> data)
{
    const double ll = log_likelihood(model, data);
    return bic(free_parameters(model.components(), model.categories()), static_cast<double>(data.size()), ll);
}

struct SelectKResult {
    int best_k = 0;
    EmResult fit;
    std::vector<std::pair<int, double>> bic_by_k;
};

/// Fits every K in the range and keeps the one with the smallest BIC (ties
/// to the smaller K).
inline SelectKResult select_k(std::span<const Histogram> data, std::span<const int> k_range, std::uint64_t seed,
                              const EmOptions& options = {})
{
    detail::require(!k_range.empty(), "select_k: empty k_range");
    SelectKResult out;
    double best_bic = std::numeric_limits<double>::infinity();
    std::vector<int> ks(k_range.begin(), k_range.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) {
        EmResult fit = em_fit_best(data, k, Rng::derive(seed, 1000 + static_cast<std::uint64_t>(k)).next(), options);
        const double score = bic(free_parameters(k, data.front().size()), static_cast<double>(data.size()),
                                 fit.log_likelihood());
        out.bic_by_k.emplace_back(k, score);
        if (score < best_bic) {
            best_bic = score;
            out.best_k = k;
            out.fit = std::move(fit);
        }
    }
    return out;
}

/// CSV rows `item_id,cluster_id,max_responsibility`.
inline void write_assignment_csv(std::ostream& os, std::span<const std::string> ids, const ClusterAssignment& a)
{
    detail::require(ids.size() == a.size(), "write_assignment_csv: id count mismatch");
    os << "item_id,cluster_id,max_responsibility\n";
    const auto old_precision = os.precision(10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        os << ids[i] << ',' << a.labels[i] << ',' << a.max_responsibility(i) << '\n';
    }
    os.precision(old_precision);
}

} // namespace tmml
