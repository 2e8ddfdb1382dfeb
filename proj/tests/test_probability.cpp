#include <tmml/probability.hpp>
#include <tmml/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace {

using tmml::CategoricalDistribution;
using tmml::ClusterCategoryTensor;
using tmml::JointDistribution;

std::vector<double> random_simplex(tmml::Rng& rng, std::size_t n, bool allow_zeros = true)
{
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& x : p) {
        x = -std::log(1.0 - rng.uniform());
        if (allow_zeros && rng.uniform() < 0.15) {
            x = 0.0;
        }
        total += x;
    }
    if (total == 0.0) {
        p[0] = total = 1.0;
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

JointDistribution random_joint(tmml::Rng& rng, std::size_t rows, std::size_t cols)
{
    return {rows, cols, random_simplex(rng, rows * cols)};
}

TEST(CategoricalDistribution, RejectsBadInput)
{
    EXPECT_THROW(CategoricalDistribution(std::vector<double>{}), tmml::ValidationError);
    EXPECT_THROW(CategoricalDistribution({0.5, 0.4}), tmml::ValidationError);
    EXPECT_THROW(CategoricalDistribution({1.2, -0.2}), tmml::ValidationError);
    EXPECT_THROW(CategoricalDistribution({0.5, 0.5}, {1.0}), tmml::ValidationError);
}

TEST(CategoricalDistribution, RenormalizesWithinTolerance)
{
    const CategoricalDistribution d({0.5 + 4e-7, 0.5});
    EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
}

TEST(CategoricalDistribution, MomentsUseCategoryValues)
{
    const CategoricalDistribution d({0.25, 0.75}, {2.0, 10.0});
    EXPECT_DOUBLE_EQ(d.mean(), 8.0);
    EXPECT_DOUBLE_EQ(d.variance(), 0.25 * 36.0 + 0.75 * 4.0);
}

TEST(MultimodalMixture, FlattenWeightsComponents)
{
    const std::vector<double> minutes{2, 5, 10, 30};
    tmml::MultimodalMixture mix({{0.6, CategoricalDistribution({1, 0, 0, 0}, minutes)},
                                 {0.4, CategoricalDistribution({0, 0, 0.5, 0.5}, minutes)}});
    const auto flat = mix.flatten();
    EXPECT_DOUBLE_EQ(flat[0], 0.6);
    EXPECT_DOUBLE_EQ(flat[2], 0.2);
    EXPECT_DOUBLE_EQ(flat.values()[3], 30.0);
    EXPECT_THROW(tmml::MultimodalMixture({{0.6, CategoricalDistribution({1.0})}}), tmml::ValidationError);
}

TEST(ShannonEntropy, Examples)
{
    EXPECT_DOUBLE_EQ(tmml::shannon_entropy(CategoricalDistribution::uniform(4)), 2.0);
    EXPECT_DOUBLE_EQ(tmml::shannon_entropy(CategoricalDistribution({1.0, 0.0, 0.0})), 0.0);
    // 0.46899559358928122125... from 30-digit evaluation of the two terms.
    EXPECT_NEAR(tmml::shannon_entropy(CategoricalDistribution({0.9, 0.1})), 0.46899559358928122, 1e-15);
}

TEST(ShannonEntropy, BoundsOnRandomDistributions)
{
    tmml::Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        const CategoricalDistribution d(random_simplex(rng, n));
        const double h = tmml::shannon_entropy(d);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, std::log2(static_cast<double>(n)) + 1e-12);
    }
}

TEST(KlDivergence, Examples)
{
    const CategoricalDistribution p({0.3, 0.7});
    EXPECT_DOUBLE_EQ(tmml::kl_divergence(p, p), 0.0);
    // log 2 in bits.
    EXPECT_DOUBLE_EQ(tmml::kl_divergence(CategoricalDistribution({1.0, 0.0}), CategoricalDistribution({0.5, 0.5})), 1.0);
    EXPECT_THROW(tmml::kl_divergence(CategoricalDistribution({0.5, 0.5}), CategoricalDistribution({1.0, 0.0})),
                 tmml::SupportMismatchError);
}

TEST(KlDivergence, GibbsInequality)
{
    tmml::Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng.index(8);
        const auto p = random_simplex(rng, n);
        const auto q = random_simplex(rng, n, false);
        EXPECT_GE(tmml::kl_divergence(p, q), 0.0);
        EXPECT_NEAR(tmml::kl_divergence(p, p), 0.0, 1e-9);
    }
}

TEST(MutualInformation, Examples)
{
    // Product of marginals.
    const std::vector<double> px{0.2, 0.8};
    const std::vector<double> py{0.1, 0.3, 0.6};
    std::vector<double> table;
    for (double a : px) {
        for (double b : py) {
            table.push_back(a * b);
        }
    }
    const JointDistribution independent(2, 3, table);
    EXPECT_NEAR(tmml::mutual_information(independent), 0.0, 1e-12);
    EXPECT_NEAR(tmml::mutual_information_via_expected_kl(independent), 0.0, 1e-12);

    // Four terms: 2 * 0.5 * log2(0.5 / 0.25) = 1, two zero cells.
    const JointDistribution correlated({{0.5, 0.0}, {0.0, 0.5}});
    EXPECT_DOUBLE_EQ(tmml::mutual_information(correlated), 1.0);
    EXPECT_DOUBLE_EQ(tmml::mutual_information_via_expected_kl(correlated), 1.0);

    EXPECT_DOUBLE_EQ(tmml::mutual_information(JointDistribution(1, 1, {1.0})), 0.0);
}

TEST(MutualInformation, BothRoutesAgreeAndAreSymmetric)
{
    tmml::Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto j = random_joint(rng, 1 + rng.index(5), 1 + rng.index(5));
        const double direct = tmml::mutual_information(j);
        EXPECT_NEAR(direct, tmml::mutual_information_via_expected_kl(j), 1e-9);
        EXPECT_NEAR(direct, tmml::mutual_information(j.transposed()), 1e-12);
        EXPECT_GE(direct, 0.0);
    }
}

TEST(MutualInformation, ZeroYColumnIsSkipped)
{
    const JointDistribution j({{0.25, 0.0, 0.25}, {0.25, 0.0, 0.25}});
    EXPECT_NEAR(tmml::mutual_information_via_expected_kl(j), 0.0, 1e-12);
}

TEST(ClusterEntropy, Examples)
{
    EXPECT_DOUBLE_EQ(tmml::cluster_entropy(ClusterCategoryTensor(2, 1, {0.5, 0.5})), 1.0);
    EXPECT_DOUBLE_EQ(tmml::cluster_entropy(ClusterCategoryTensor(4, 4, std::vector<double>(16, 1.0 / 16))), 4.0);
    // 0.7 log2(1/0.7) + 3 * 0.1 log2(10) = 1.35677964944703947...
    EXPECT_NEAR(tmml::cluster_entropy(ClusterCategoryTensor(2, 2, {0.7, 0.1, 0.1, 0.1})), 1.3567796494470395, 1e-14);
}

TEST(ClusterEntropy, PermutationInvariantAndBounded)
{
    tmml::Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + rng.index(5);
        const std::size_t t = 1 + rng.index(5);
        auto p = random_simplex(rng, k * t);
        const double h = tmml::cluster_entropy(ClusterCategoryTensor(k, t, p));
        for (std::size_t i = p.size(); i > 1; --i) {
            std::swap(p[i - 1], p[rng.index(i)]);
        }
        EXPECT_NEAR(h, tmml::cluster_entropy(ClusterCategoryTensor(k, t, p)), 1e-12);
        EXPECT_LE(h, std::log2(static_cast<double>(k * t)) + 1e-12);
    }
}

TEST(EntropyPercent, ScalesToMaximum)
{
    EXPECT_DOUBLE_EQ(tmml::entropy_percent(CategoricalDistribution::uniform(8).probs()), 100.0);
    EXPECT_DOUBLE_EQ(tmml::entropy_percent(CategoricalDistribution({1.0}).probs()), 0.0);
}

} // namespace
