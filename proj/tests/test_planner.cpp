#include <tmml/planner.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

namespace {

using tmml::Point;
using tmml::UtilityMap;

tmml::BeliefMap uniform_beliefs(int rows, int cols, int vars, int stages, double var)
{
    std::vector<std::string> names(static_cast<std::size_t>(vars), "v");
    tmml::BeliefMap m(rows, cols, names, stages);
    for (int c = 0; c < static_cast<int>(m.cell_count()); ++c) {
        for (int v = 0; v < vars; ++v) {
            for (int t = 0; t < stages; ++t) {
                m.set(c, v, t, 0.0, var);
            }
        }
    }
    return m;
}

TEST(UtilityMap, IdenticalCellsGiveEqualUtilities)
{
    const auto u = tmml::build_utility_map(uniform_beliefs(4, 4, 2, 3, 2.0));
    for (double v : u.values()) {
        EXPECT_EQ(v, u.values()[0]);
    }
}

TEST(UtilityMap, DominantCellReachesTwo)
{
    auto m = uniform_beliefs(3, 3, 2, 2, 1.0);
    for (int v = 0; v < 2; ++v) {
        for (int t = 0; t < 2; ++t) {
            m.set_variance(4, v, t, 9.0);
        }
    }
    std::vector<int> labels(9, 0);
    labels[4] = 1;
    m.set_joint_clusters(labels);
    m.set_cluster_entropy({20.0, 95.0});
    const auto u = tmml::build_utility_map(m, {1.0, 1.0});
    EXPECT_DOUBLE_EQ(u[4], 2.0);
    EXPECT_DOUBLE_EQ(u[0], 0.0);
}

// Reference utilities recomputed independently in a spreadsheet-style script.
TEST(UtilityMap, HandBuiltThreeByThree)
{
    auto m = uniform_beliefs(3, 3, 2, 2, 1.0);
    for (int c = 0; c < 9; ++c) {
        for (int x = 0; x < 2; ++x) {
            for (int t = 0; t < 2; ++t) {
                const double sd = (c % 4) + 1 + 0.5 * x * c + t;
                m.set_variance(c, x, t, sd * sd);
            }
        }
    }
    m.set_joint_clusters({0, 0, 1, 1, 2, 2, 0, 1, 2});
    m.set_cluster_entropy({10, 50, 90});
    m.record_observation(1);
    const auto u = tmml::build_utility_map(m, {1.0, 0.5});
    const double expected[] = {0.0,
                               0.2769953051643193,
                               0.6477406103286385,
                               0.9247359154929577,
                               0.6690140845070423,
                               0.9460093896713615,
                               0.7230046948356808,
                               1.09375,
                               0.8380281690140845};
    for (int c = 0; c < 9; ++c) {
        EXPECT_NEAR(u[c], expected[c], 1e-12) << c;
    }
}

TEST(Steer, Examples)
{
    const UtilityMap map(5, 5, std::vector<double>(25, 1.0));
    const auto a = tmml::steer(map, {0, 0}, {3, 4}, 1.0);
    EXPECT_NEAR(a.position.row, 0.6, 1e-15);
    EXPECT_NEAR(a.position.col, 0.8, 1e-15);
    const auto b = tmml::steer(map, {1, 1}, {1.5, 1.2}, 1.0);
    EXPECT_EQ(b.position, (Point{1.5, 1.2}));
    const auto c = tmml::steer(map, {4, 4}, {9, 4}, 2.0);
    EXPECT_EQ(c.position, (Point{4, 4}));
    EXPECT_THROW(tmml::steer(map, {0, 0}, {1, 1}, 0.0), tmml::ValidationError);
}

TEST(Plan, StartEqualsGoal)
{
    const UtilityMap map(3, 3, std::vector<double>(9, 1.0));
    const auto r = tmml::plan(map, {1, 1}, {1, 1}, {}, 1);
    ASSERT_TRUE(r.found);
    EXPECT_EQ(r.path.size(), 1u);
}

TEST(Plan, CorridorIsVisitedInOrder)
{
    const UtilityMap map(1, 5, {0.2, 0.5, 0.1, 0.7, 0.3});
    tmml::PlannerOptions opts;
    opts.samples = 300;
    const auto r = tmml::plan(map, {0, 0}, {0, 4}, opts, 3);
    ASSERT_TRUE(r.found);
    std::vector<int> cells;
    for (int id : r.path) {
        if (cells.empty() || cells.back() != r.tree[id].cell) {
            cells.push_back(r.tree[id].cell);
        }
    }
    EXPECT_EQ(cells, (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_NEAR(r.utility, 1.8, 1e-12);
}

TEST(Plan, UnreachableGoalReportsNoPath)
{
    const UtilityMap map(5, 5, std::vector<double>(25, 1.0));
    tmml::PlannerOptions opts;
    opts.samples = 200;
    opts.max_cost = 2.0;
    const auto r = tmml::plan(map, {0, 0}, {4, 4}, opts, 1);
    EXPECT_FALSE(r.found);
    EXPECT_TRUE(r.path.empty());
}

TEST(Plan, RejectsBadArguments)
{
    const UtilityMap map(2, 2, std::vector<double>(4, 1.0));
    EXPECT_THROW(tmml::plan(map, {3, 0}, {1, 1}, {}, 1), tmml::ValidationError);
    tmml::PlannerOptions none;
    none.samples = 0;
    EXPECT_THROW(tmml::plan(map, {0, 0}, {1, 1}, none, 1), tmml::ValidationError);
}

TEST(Plan, DeterministicGivenSeed)
{
    std::vector<double> v(36);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<double>((i * 7) % 11) / 10.0;
    }
    const UtilityMap map(6, 6, v);
    tmml::PlannerOptions opts;
    opts.samples = 500;
    opts.max_cost = 14;
    const auto a = tmml::plan(map, {0, 0}, {5, 5}, opts, 42);
    const auto b = tmml::plan(map, {0, 0}, {5, 5}, opts, 42);
    ASSERT_EQ(a.tree.size(), b.tree.size());
    for (int i = 0; i < static_cast<int>(a.tree.size()); ++i) {
        EXPECT_EQ(a.tree[i].position, b.tree[i].position);
        EXPECT_EQ(a.tree[i].parent, b.tree[i].parent);
    }
    EXPECT_EQ(a.path, b.path);
}

TEST(Plan, InvariantsHoldAfterEveryMutation)
{
    tmml::Rng rng(4);
    std::vector<double> v(49);
    for (auto& x : v) {
        x = rng.uniform();
    }
    const UtilityMap map(7, 7, v);
    tmml::PlannerOptions opts;
    opts.samples = 600;
    opts.max_cost = 12;
    opts.check_every_step = true;
    const auto r = tmml::plan(map, {0, 0}, {6, 6}, opts, 9);
    r.tree.check_invariants(opts.max_cost);
    EXPECT_GT(r.rewires, 0);
    // Stored utilities equal a fresh recomputation along each root path.
    for (int i = 0; i < static_cast<int>(r.tree.size()); ++i) {
        std::vector<char> seen(49, 0);
        double u = 0.0;
        for (int id : r.tree.path_to(i)) {
            const int c = r.tree[id].cell;
            if (!seen[static_cast<std::size_t>(c)]) {
                u += map[c];
                seen[static_cast<std::size_t>(c)] = 1;
            }
        }
        EXPECT_NEAR(r.tree[i].utility, u, 1e-9);
    }
}

TEST(BestGridPath, Examples)
{
    const UtilityMap map(2, 2, {1, 5, 2, 1});
    const auto one = tmml::best_grid_path(map, 0, 3, 3);
    EXPECT_EQ(one.cells, (std::vector<int>{0, 1, 3}));
    EXPECT_EQ(one.utility, 7.0);
    EXPECT_FALSE(tmml::best_grid_path(map, 0, 3, 2).found());
    EXPECT_EQ(tmml::best_grid_path(map, 2, 2, 1).utility, 2.0);
}

TEST(Plan, RidgeWithinTenPercentOfExhaustiveOptimum)
{
    std::vector<double> v(25, 0.1);
    for (int c = 0; c < 5; ++c) {
        v[static_cast<std::size_t>(2 * 5 + c)] = 1.0;
    }
    const UtilityMap map(5, 5, v);
    const int max_cells = 13;
    const auto best = tmml::best_grid_path(map, 0, 24, max_cells);
    tmml::PlannerOptions opts;
    opts.samples = 2000;
    opts.max_cost = max_cells - 1;
    const auto r = tmml::plan(map, {0, 0}, {4, 4}, opts, 5);
    ASSERT_TRUE(r.found);
    EXPECT_GE(r.utility, 0.9 * best.utility);
    EXPECT_LE(r.cost, opts.max_cost + 1e-9);
}

TEST(Plan, SmallGridsMatchExhaustiveOptimum)
{
    tmml::Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = trial % 2 == 0 ? 3 : 4;
        std::vector<double> v(static_cast<std::size_t>(n * n));
        for (auto& x : v) {
            x = rng.uniform();
        }
        const UtilityMap map(n, n, v);
        const int max_cells = 2 * n + 1;
        const auto best = tmml::best_grid_path(map, 0, n * n - 1, max_cells);
        tmml::PlannerOptions opts;
        opts.max_cost = max_cells - 1;
        const auto r = tmml::plan(map, {0, 0}, {n - 1.0, n - 1.0}, opts, static_cast<std::uint64_t>(trial));
        ASSERT_TRUE(r.found) << trial;
        EXPECT_GE(r.utility, 0.9 * best.utility) << trial;
    }
}

// X=(0,0) -> S1=(0,1) -> S2=(0,2); candidate N=(1,0) hangs off the root.
// Cells 0 and 1 share a cluster, so a perfect reading at X wipes out S1's
// variance while N keeps its own.
struct HandTree {
    tmml::BeliefMap beliefs = uniform_beliefs(2, 3, 1, 1, 4.0);
    tmml::PlanResult plan;
    tmml::RecourseOptions opts;

    HandTree()
    {
        beliefs.set_joint_clusters({0, 0, 1, 2, 3, 4});
        const auto map = tmml::build_utility_map(beliefs);
        auto& t = plan.tree;
        t.add({{0, 0}, 0, -1});
        t.add({{0, 1}, 1, 0});
        t.add({{0, 2}, 2, 1});
        t.add({{1, 0}, 3, 0});
        t.refresh_subtree(0, map);
        plan.path = {0, 1, 2};
        plan.found = true;
        opts.weights = {1.0, 0.0};
        opts.policy.radius = 0.5;
    }
};

TEST(OnlineRecourse, UnchangedMapKeepsThePlannedPath)
{
    HandTree h;
    const auto r = tmml::online_recourse(
        h.plan, h.beliefs, [](int, int) { return std::vector<tmml::Observation>{}; }, h.opts);
    EXPECT_EQ(r.executed, (std::vector<int>{0, 1, 2}));
    EXPECT_TRUE(r.reached_goal);
    EXPECT_EQ(r.replacements, 0);
}

TEST(OnlineRecourse, CollapsedSuccessorIsReplaced)
{
    HandTree h;
    const auto observe = [](int cell, int step) {
        std::vector<tmml::Observation> out;
        if (step == 0) {
            out.push_back({cell, 0, 0, 1.0, 0.0});
        }
        return out;
    };
    const auto r = tmml::online_recourse(h.plan, h.beliefs, observe, h.opts);
    EXPECT_EQ(r.executed, (std::vector<int>{0, 3, 2}));
    EXPECT_EQ(r.replacements, 1);
    EXPECT_EQ(h.plan.tree[2].parent, 3);
    EXPECT_EQ(h.plan.tree[3].parent, 0);
    h.plan.tree.check_invariants();
}

TEST(OnlineRecourse, EqualUtilityNeverSwaps)
{
    HandTree h;
    const auto observe = [](int cell, int step) {
        std::vector<tmml::Observation> out;
        if (step == 0) {
            out.push_back({cell, 0, 0, 1.0, std::numeric_limits<double>::infinity()});
        }
        return out;
    };
    const auto r = tmml::online_recourse(h.plan, h.beliefs, observe, h.opts);
    EXPECT_EQ(r.executed, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(r.replacements, 0);
}

TEST(OnlineRecourse, HorizonTruncates)
{
    HandTree h;
    h.opts.horizon = 1;
    const auto r = tmml::online_recourse(
        h.plan, h.beliefs, [](int, int) { return std::vector<tmml::Observation>{}; }, h.opts);
    EXPECT_TRUE(r.truncated);
    EXPECT_FALSE(r.reached_goal);
    EXPECT_EQ(r.executed, (std::vector<int>{0, 1}));
}

TEST(PathJson, ListsWaypoints)
{
    const UtilityMap map(1, 3, {0.5, 0.25, 1.0});
    const auto r = tmml::plan(map, {0, 0}, {0, 2}, {}, 2);
    const auto doc = tmml::path_to_json(r, map);
    EXPECT_TRUE(doc["found"].get<bool>());
    EXPECT_EQ(doc["waypoints"].size(), r.path.size());
    EXPECT_EQ(doc["waypoints"].back()["cell"].get<int>(), 2);
}

} // namespace
