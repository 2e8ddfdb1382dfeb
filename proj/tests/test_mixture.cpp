#include <tmml/mixture.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace {

using tmml::Histogram;

Histogram draw_histogram(tmml::Rng& rng, const std::vector<double>& probs, int draws)
{
    Histogram h(probs.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
        h[rng.categorical(probs)] += 1.0;
    }
    return h;
}

struct Sample {
    std::vector<Histogram> data;
    std::vector<int> truth;
};

Sample two_groups(std::uint64_t seed, int per_group = 30, int draws = 20)
{
    tmml::Rng rng(seed);
    Sample s;
    const std::vector<std::vector<double>> gen{{0.95, 0.05}, {0.05, 0.95}};
    for (int g = 0; g < 2; ++g) {
        for (int i = 0; i < per_group; ++i) {
            s.data.push_back(draw_histogram(rng, gen[static_cast<std::size_t>(g)], draws));
            s.truth.push_back(g);
        }
    }
    return s;
}

TEST(EmFit, SeparatedGroupsAreRecoveredWithHighResponsibility)
{
    const auto s = two_groups(1);
    const auto fit = tmml::em_fit_best(s.data, 2, 99);
    // Map each generating group to the cluster holding its first item.
    std::map<int, int> cluster_of;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        cluster_of.emplace(s.truth[i], fit.assignment.labels[i]);
    }
    ASSERT_NE(cluster_of[0], cluster_of[1]);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        EXPECT_GE(fit.assignment.responsibilities[i][static_cast<std::size_t>(cluster_of[s.truth[i]])], 0.99) << i;
    }
}

TEST(EmFit, SingleComponentIsPooledFrequency)
{
    const std::vector<Histogram> data{{3, 1, 0}, {1, 1, 2}, {0, 0, 4}};
    const auto fit = tmml::em_fit(data, 1, 5);
    ASSERT_EQ(fit.model.alpha.size(), 1u);
    EXPECT_DOUBLE_EQ(fit.model.alpha[0], 1.0);
    EXPECT_NEAR(fit.model.beta[0][0], 4.0 / 12, 1e-15);
    EXPECT_NEAR(fit.model.beta[0][1], 2.0 / 12, 1e-15);
    EXPECT_NEAR(fit.model.beta[0][2], 6.0 / 12, 1e-15);
}

TEST(EmFit, IdenticalItemsCollapseToCommonDistribution)
{
    const std::vector<Histogram> data(12, Histogram{5, 3, 2});
    const auto one = tmml::em_fit(data, 1, 3);
    const auto two = tmml::em_fit(data, 2, 3);
    for (const auto& b : two.model.beta) {
        EXPECT_NEAR(b[0], 0.5, 1e-12);
        EXPECT_NEAR(b[1], 0.3, 1e-12);
        EXPECT_NEAR(b[2], 0.2, 1e-12);
    }
    EXPECT_NEAR(two.log_likelihood(), one.log_likelihood(), 1e-6);
}

TEST(EmFit, LogLikelihoodIsMonotone)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        tmml::Rng rng(seed);
        std::vector<Histogram> data;
        for (int i = 0; i < 40; ++i) {
            std::vector<double> p{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
            data.push_back(draw_histogram(rng, p, 15));
        }
        const auto fit = tmml::em_fit(data, 3, seed, 300, 1e-10);
        for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
            EXPECT_GE(fit.log_likelihood_trace[i], fit.log_likelihood_trace[i - 1] - 1e-9) << "seed " << seed;
        }
    }
}

TEST(EmFit, LabelsAreArgmaxAndRowsNormalized)
{
    const auto s = two_groups(4);
    const auto fit = tmml::em_fit(s.data, 3, 8);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const auto& row = fit.assignment.responsibilities[i];
        double total = 0.0;
        for (double r : row) {
            total += r;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_EQ(fit.assignment.labels[i], std::max_element(row.begin(), row.end()) - row.begin());
    }
}

TEST(EmFit, DeterministicGivenSeed)
{
    const auto s = two_groups(5);
    const auto a = tmml::em_fit_best(s.data, 2, 77);
    const auto b = tmml::em_fit_best(s.data, 2, 77);
    EXPECT_EQ(a.assignment.labels, b.assignment.labels);
    EXPECT_EQ(a.log_likelihood_trace, b.log_likelihood_trace);
    EXPECT_EQ(a.model.alpha, b.model.alpha);
}

TEST(EmFit, RelabelingLeavesLikelihoodUnchanged)
{
    const auto s = two_groups(6);
    const auto fit = tmml::em_fit(s.data, 2, 1);
    tmml::MixtureModel swapped{{fit.model.alpha[1], fit.model.alpha[0]}, {fit.model.beta[1], fit.model.beta[0]}};
    EXPECT_NEAR(tmml::log_likelihood(fit.model, s.data), tmml::log_likelihood(swapped, s.data), 1e-9);
}

TEST(EmFit, Errors)
{
    const std::vector<Histogram> empty;
    EXPECT_THROW(tmml::em_fit(empty, 1, 0), tmml::ValidationError);
    const std::vector<Histogram> two{{1, 0}, {0, 1}};
    EXPECT_THROW(tmml::em_fit(two, 3, 0), tmml::ValidationError);
    EXPECT_THROW(tmml::em_fit(two, 0, 0), tmml::ValidationError);
    const std::vector<Histogram> ragged{{1, 0}, {0, 1, 1}};
    EXPECT_THROW(tmml::em_fit(ragged, 1, 0), tmml::ValidationError);
    const std::vector<Histogram> blank{{0, 0}};
    EXPECT_THROW(tmml::em_fit(blank, 1, 0), tmml::ValidationError);
}

TEST(Bic, Examples)
{
    // 3 ln 100 + 100 = 113.81551055796427...
    EXPECT_NEAR(tmml::bic(3, 100, -50), 113.81551055796427, 1e-12);
    EXPECT_DOUBLE_EQ(tmml::bic(7, 1, -12.5), 25.0);
    EXPECT_LT(tmml::bic(3, 50, -40), tmml::bic(4, 50, -40));
    EXPECT_EQ(tmml::free_parameters(2, 2), 3);
    EXPECT_EQ(tmml::free_parameters(1, 5), 4);
}

TEST(SelectK, SeparatedGroupsGiveTwo)
{
    const auto s = two_groups(7);
    const std::vector<int> ks{1, 2, 3, 4, 5};
    const auto sel = tmml::select_k(s.data, ks, 3, {.max_iter = 300, .tol = 1e-8, .n_restarts = 5});
    EXPECT_EQ(sel.best_k, 2);
    // Direct check of the BIC table the choice was made from.
    double bic2 = 0.0;
    for (auto [k, b] : sel.bic_by_k) {
        if (k == 2) {
            bic2 = b;
        }
    }
    for (auto [k, b] : sel.bic_by_k) {
        if (k != 2) {
            EXPECT_LT(bic2, b) << "k=" << k;
        }
    }
}

TEST(SelectK, IdenticalItemsGiveOne)
{
    const std::vector<Histogram> data(20, Histogram{4, 4, 2});
    const std::vector<int> ks{1, 2, 3};
    EXPECT_EQ(tmml::select_k(data, ks, 1, {.n_restarts = 2}).best_k, 1);
}

TEST(SelectK, SingletonRange)
{
    const auto s = two_groups(8);
    const std::vector<int> ks{3};
    EXPECT_EQ(tmml::select_k(s.data, ks, 1, {.n_restarts = 2}).best_k, 3);
    EXPECT_THROW(tmml::select_k(s.data, std::vector<int>{}, 1), tmml::ValidationError);
}

TEST(AssignmentCsv, WritesHeaderAndRows)
{
    tmml::ClusterAssignment a{{1, 0}, {{0.2, 0.8}, {0.9, 0.1}}};
    const std::vector<std::string> ids{"cell0", "cell1"};
    std::ostringstream os;
    tmml::write_assignment_csv(os, ids, a);
    EXPECT_EQ(os.str(), "item_id,cluster_id,max_responsibility\ncell0,1,0.8\ncell1,0,0.9\n");
}

} // namespace
