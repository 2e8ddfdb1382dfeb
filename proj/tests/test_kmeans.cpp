#include <tmml/kmeans.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace {

struct Blobs {
    std::vector<tmml::EntropyFeature> features;
    std::vector<int> truth;
};

Blobs three_blobs(std::uint64_t seed)
{
    tmml::Rng rng(seed);
    const double centres[3][2] = {{10.0, 5.0}, {50.0, 30.0}, {90.0, 8.0}};
    Blobs b;
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 25; ++i) {
            b.features.push_back({"item" + std::to_string(b.features.size()), rng.normal(centres[g][0], 1.0),
                                  rng.normal(centres[g][1], 1.0)});
            b.truth.push_back(g);
        }
    }
    return b;
}

TEST(KMeans, FindsSeparatedCentres)
{
    const auto b = three_blobs(2);
    std::vector<std::vector<double>> rows;
    for (const auto& f : b.features) {
        rows.push_back({f.entropy_percent, f.expected_value});
    }
    const auto fit = tmml::kmeans(tmml::PointSet::from_rows(rows), 3, 4);
    std::set<int> distinct(fit.labels.begin(), fit.labels.end());
    EXPECT_EQ(distinct.size(), 3u);
    EXPECT_LT(fit.inertia, 75 * 2 * 2.0);
}

TEST(KMeansGap, ThreeBlobsGiveThreeAndMatchMembership)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto b = three_blobs(seed);
        const std::vector<int> ks{1, 2, 3, 4, 5, 6};
        const auto gap = tmml::kmeans_gap(b.features, ks, seed);
        ASSERT_EQ(gap.best_k, 3) << "seed " << seed;
        std::map<int, int> mapping;
        for (std::size_t i = 0; i < b.truth.size(); ++i) {
            auto [it, inserted] = mapping.emplace(b.truth[i], gap.labels[i]);
            EXPECT_EQ(it->second, gap.labels[i]) << i;
        }
        std::set<int> images;
        for (auto [g, l] : mapping) {
            images.insert(l);
        }
        EXPECT_EQ(images.size(), 3u);
    }
}

TEST(KMeansGap, IdenticalFeaturesGiveOne)
{
    const std::vector<tmml::EntropyFeature> same(10, {"x", 40.0, 12.0});
    const std::vector<int> ks{1, 2, 3};
    EXPECT_EQ(tmml::kmeans_gap(same, ks, 1).best_k, 1);
}

TEST(KMeansGap, Errors)
{
    const std::vector<tmml::EntropyFeature> one{{"a", 1.0, 1.0}};
    const std::vector<int> ks{1, 2};
    EXPECT_THROW(tmml::kmeans_gap(one, ks, 1), tmml::ValidationError);
    const std::vector<tmml::EntropyFeature> three{{"a", 1, 1}, {"b", 2, 2}, {"c", 3, 3}};
    const std::vector<int> too_many{1, 4};
    EXPECT_THROW(tmml::kmeans_gap(three, too_many, 1), tmml::ValidationError);
}

TEST(KMeansGap, Deterministic)
{
    const auto b = three_blobs(9);
    const std::vector<int> ks{2, 3, 4};
    const auto x = tmml::kmeans_gap(b.features, ks, 5);
    const auto y = tmml::kmeans_gap(b.features, ks, 5);
    EXPECT_EQ(x.labels, y.labels);
    EXPECT_EQ(x.gap, y.gap);
}

TEST(EntropyFeature, PercentOfMaximum)
{
    const tmml::CategoricalDistribution d({0.5, 0.5, 0.0, 0.0}, {2, 5, 10, 30});
    const auto f = tmml::make_entropy_feature("c", d);
    EXPECT_DOUBLE_EQ(f.entropy_percent, 50.0);
    EXPECT_DOUBLE_EQ(f.expected_value, 3.5);
}

TEST(PointSet, StandardizedHasUnitScale)
{
    const auto p = tmml::PointSet::from_rows({{1, 100}, {3, 100}, {5, 100}}).standardized();
    EXPECT_NEAR(p.row(0)[0] + p.row(1)[0] + p.row(2)[0], 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.row(0)[1], 0.0);
}

} // namespace
