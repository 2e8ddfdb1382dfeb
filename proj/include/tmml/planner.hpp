#pragma once

// Utility-driven path planning. A UtilityMap scores each grid cell by its
// remaining uncertainty and its cluster's entropy; plan() grows an RRT*
// tree that maximizes the utility collected on the way to the goal, and
// online_recourse() walks that path while observations reshape the map.

#include <tmml/belief.hpp>
#include <tmml/error.hpp>
#include <tmml/posterior.hpp>
#include <tmml/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmml {

struct UtilityWeights {
    double sigma = 1.0;
    double entropy = 1.0;
};

class UtilityMap {
public:
    UtilityMap(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values))
    {
        detail::require(rows > 0 && cols > 0, "UtilityMap: grid must be non-empty");
        detail::require(values_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                        "UtilityMap: value count does not match the grid");
        for (double v : values_) {
            detail::require(std::isfinite(v), "UtilityMap: utilities must be finite");
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t cell_count() const noexcept { return values_.size(); }
    double operator[](int cell) const { return values_.at(static_cast<std::size_t>(cell)); }
    double at(int row, int col) const { return (*this)[row * cols_ + col]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    int rows_;
    int cols_;
    std::vector<double> values_;
};

namespace detail {

/// Min-max scaling to [0, 1]; a constant vector maps to zeros.
inline std::vector<double> minmax_normalized(std::vector<double> v)
{
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo;
    const double span = *hi - *lo;
    for (auto& x : v) {
        x = span > 0.0 ? (x - a) / span : 0.0;
    }
    return v;
}

} // namespace detail

/// Per cell: w_sigma * minmax(sum_x sigma_hat(x, j)) + w_entropy * minmax(H(j)).
/// sigma_hat is the stage-averaged standard deviation of variable x scaled
/// by its map-wide maximum. H(j) averages, over variables, the entropy
/// percentage of the cell's cluster discounted by the cluster's sequential
/// weight, so well-sampled clusters stop attracting the planner.
inline UtilityMap build_utility_map(const BeliefMap& beliefs, UtilityWeights weights = {})
{
    const std::size_t n = beliefs.cell_count();
    const std::size_t nv = beliefs.variable_count();
    const int stages = beliefs.stages();

    std::vector<double> sigma_sum(n, 0.0);
    std::vector<double> sd(n);
    for (std::size_t x = 0; x < nv; ++x) {
        double top = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < stages; ++t) {
                acc += std::sqrt(beliefs.variance(static_cast<int>(j), static_cast<int>(x), t));
            }
            sd[j] = acc / stages;
            top = std::max(top, sd[j]);
        }
        if (top > 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                sigma_sum[j] += sd[j] / top;
            }
        }
    }

    std::vector<double> entropy(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t x = 0; x < nv; ++x) {
            const int c = beliefs.cluster(static_cast<int>(j), static_cast<int>(x));
            entropy[j] += beliefs.cluster_entropy(c) * sequential_weight(beliefs.observation_count(c));
        }
        entropy[j] /= static_cast<double>(nv);
    }

    const auto s = detail::minmax_normalized(std::move(sigma_sum));
    const auto h = detail::minmax_normalized(std::move(entropy));
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) {
        u[j] = weights.sigma * s[j] + weights.entropy * h[j];
    }
    return {beliefs.rows(), beliefs.cols(), std::move(u)};
}

/// Continuous position; cell (r, c) is centred on the integer point.
struct Point {
    double row = 0.0;
    double col = 0.0;
    bool operator==(const Point&) const = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.row - b.row, a.col - b.col); }

inline Point clamp_to(const UtilityMap& map, Point p)
{
    return {std::clamp(p.row, 0.0, static_cast<double>(map.rows() - 1)),
            std::clamp(p.col, 0.0, static_cast<double>(map.cols() - 1))};
}

inline int cell_of(const UtilityMap& map, Point p)
{
    const Point q = clamp_to(map, p);
    return static_cast<int>(std::lround(q.row)) * map.cols() + static_cast<int>(std::lround(q.col));
}

inline Point centre_of(const UtilityMap& map, int cell)
{
    return {static_cast<double>(cell / map.cols()), static_cast<double>(cell % map.cols())};
}

struct SteerResult {
    Point position;
    double utility = 0.0; ///< utility of the landing cell
};

/// Moves at most `step` from `from` toward `toward`, clamped to the grid.
inline SteerResult steer(const UtilityMap& map, Point from, Point toward, double step)
{
    detail::require(step > 0.0, "steer: step must be positive");
    const double d = distance(from, toward);
    Point p = toward;
    if (d > step) {
        const double f = step / d;
        p = {from.row + f * (toward.row - from.row), from.col + f * (toward.col - from.col)};
    }
    p = clamp_to(map, p);
    return {p, map[cell_of(map, p)]};
}

struct TreeNode {
    Point position;
    int cell = 0;
    int parent = -1;
    double utility = 0.0; ///< utility collected from the root, each cell counted once
    double cost = 0.0;    ///< path length from the root
};

class PlanTree {
public:
    PlanTree() = default;

    int add(const TreeNode& node)
    {
        nodes_.push_back(node);
        children_.emplace_back();
        const int id = static_cast<int>(nodes_.size()) - 1;
        if (node.parent >= 0) {
            children_.at(static_cast<std::size_t>(node.parent)).push_back(id);
        }
        return id;
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const
    {
        std::size_t e = 0;
        for (const auto& c : children_) {
            e += c.size();
        }
        return e;
    }
    const TreeNode& operator[](int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    TreeNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const std::vector<int>& children(int id) const { return children_.at(static_cast<std::size_t>(id)); }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

    bool is_ancestor(int a, int id) const
    {
        for (int p = id; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
            if (p == a) {
                return true;
            }
        }
        return false;
    }

    void reparent(int id, int new_parent)
    {
        auto& old = children_.at(static_cast<std::size_t>(nodes_.at(static_cast<std::size_t>(id)).parent));
        old.erase(std::find(old.begin(), old.end(), id));
        nodes_[static_cast<std::size_t>(id)].parent = new_parent;
        children_.at(static_cast<std::size_t>(new_parent)).push_back(id);
    }

    /// Ids from the root down to `id`.
    std::vector<int> path_to(int id) const
    {
        std::vector<int> out;
        for (int p = id; p >= 0; p = nodes_.at(static_cast<std::size_t>(p)).parent) {
            out.push_back(p);
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Largest cost in the subtree rooted at `id`.
    double subtree_max_cost(int id) const
    {
        return subtree_max(id, [](const TreeNode& n) { return n.cost; });
    }

    /// Largest f(node) over the subtree rooted at `id`.
    template <class F>
    double subtree_max(int id, F f) const
    {
        double top = f(nodes_.at(static_cast<std::size_t>(id)));
        std::vector<int> stack{id};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            top = std::max(top, f(nodes_[static_cast<std::size_t>(v)]));
            for (int c : children_[static_cast<std::size_t>(v)]) {
                stack.push_back(c);
            }
        }
        return top;
    }

    /// Recomputes cost and utility below `id` (inclusive) from its parent.
    void refresh_subtree(int id, const UtilityMap& map)
    {
        std::vector<int> visits(map.cell_count(), 0);
        const int parent = nodes_.at(static_cast<std::size_t>(id)).parent;
        for (int p = parent; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
            ++visits[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(p)].cell)];
        }
        // Depth-first walk; a negative entry marks the exit from a node.
        std::vector<int> stack{id};
        while (!stack.empty()) {
            const int entry = stack.back();
            stack.pop_back();
            if (entry < 0) {
                --visits[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(~entry)].cell)];
                continue;
            }
            auto& n = nodes_[static_cast<std::size_t>(entry)];
            auto& count = visits[static_cast<std::size_t>(n.cell)];
            if (n.parent < 0) {
                n.cost = 0.0;
                n.utility = map[n.cell];
            } else {
                const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
                n.cost = p.cost + distance(p.position, n.position);
                n.utility = p.utility + (count == 0 ? map[n.cell] : 0.0);
            }
            ++count;
            stack.push_back(~entry);
            for (int c : children_[static_cast<std::size_t>(entry)]) {
                stack.push_back(c);
            }
        }
    }

    /// Utility a new child of `parent` landing in `cell` would hold.
    double utility_via(int parent, int cell, const UtilityMap& map) const
    {
        for (int p = parent; p >= 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
            if (nodes_[static_cast<std::size_t>(p)].cell == cell) {
                return nodes_[static_cast<std::size_t>(parent)].utility;
            }
        }
        return nodes_.at(static_cast<std::size_t>(parent)).utility + map[cell];
    }

    /// Throws std::logic_error when the structure is not a single rooted
    /// tree, when stored costs disagree with edge lengths, or when a node
    /// exceeds `max_cost`.
    void check_invariants(double max_cost = std::numeric_limits<double>::infinity()) const
    {
        if (nodes_.empty()) {
            return;
        }
        if (edge_count() != nodes_.size() - 1) {
            throw std::logic_error("tree: |E| != |V| - 1");
        }
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<int> stack{0};
        std::size_t reached = 0;
        if (nodes_[0].parent != -1) {
            throw std::logic_error("tree: node 0 is not the root");
        }
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            if (seen[static_cast<std::size_t>(v)]) {
                throw std::logic_error("tree: cycle");
            }
            seen[static_cast<std::size_t>(v)] = 1;
            ++reached;
            const auto& n = nodes_[static_cast<std::size_t>(v)];
            if (n.cost > max_cost + 1e-9) {
                throw std::logic_error("tree: node " + std::to_string(v) + " exceeds the cost budget");
            }
            for (int c : children_[static_cast<std::size_t>(v)]) {
                const auto& child = nodes_[static_cast<std::size_t>(c)];
                if (child.parent != v) {
                    throw std::logic_error("tree: child list disagrees with parent link");
                }
                if (std::abs(child.cost - n.cost - distance(n.position, child.position)) > 1e-9) {
                    throw std::logic_error("tree: stale cost at node " + std::to_string(c));
                }
                stack.push_back(c);
            }
        }
        if (reached != nodes_.size()) {
            throw std::logic_error("tree: unreachable nodes");
        }
    }

private:
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> children_;
};

struct PlannerOptions {
    int samples = 2000;
    double step = 1.0;
    /// Path-length budget. A node is accepted only if its cost plus the
    /// straight-line distance to the goal fits.
    double max_cost = std::numeric_limits<double>::infinity();
    /// Near radius is min(gamma * sqrt(log n / n), near_cap), never below step.
    double gamma = 6.0;
    double near_cap = 2.0;
    /// Independent trees sharing the sample budget; the best path wins.
    int restarts = 4;
    /// Probability of sampling the goal instead of a uniform point.
    double goal_bias = 0.05;
    /// Verify tree invariants after every insert and rewire.
    bool check_every_step = false;
};

struct PlanResult {
    PlanTree tree;
    std::vector<int> path; ///< node ids root to goal; empty when no path was found
    bool found = false;
    double utility = 0.0;
    double cost = 0.0;
    int rewires = 0;
};

namespace detail {

/// Highest utility, then smallest distance, then lowest id.
struct Best {
    int id = -1;
    double utility = -std::numeric_limits<double>::infinity();
    double distance = std::numeric_limits<double>::infinity();

    void offer(int cand, double u, double d)
    {
        if (id < 0 || u > utility || (u == utility && (d < distance || (d == distance && cand < id)))) {
            id = cand;
            utility = u;
            distance = d;
        }
    }
};

inline int best_goal_node(const PlanTree& tree, int goal_cell)
{
    Best best;
    for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
        if (tree[i].cell == goal_cell) {
            best.offer(i, tree[i].utility, tree[i].cost);
        }
    }
    return best.id;
}

inline void finish(PlanResult& out, int goal_cell)
{
    const int g = best_goal_node(out.tree, goal_cell);
    out.found = g >= 0;
    out.path = out.found ? out.tree.path_to(g) : std::vector<int>{};
    out.utility = out.found ? out.tree[g].utility : 0.0;
    out.cost = out.found ? out.tree[g].cost : 0.0;
}

} // namespace detail

namespace detail {

inline PlanResult grow_tree(const UtilityMap& map, Point start, Point goal, const PlannerOptions& opts, int samples,
                            Rng rng)
{
    PlanResult out;
    const int goal_cell = cell_of(map, goal);
    TreeNode root;
    root.position = start;
    root.cell = cell_of(map, start);
    root.utility = map[root.cell];
    out.tree.add(root);
    if (root.cell == goal_cell) {
        finish(out, goal_cell);
        return out;
    }

    PlanTree& tree = out.tree;
    const auto to_goal = [&](Point p) { return distance(p, goal); };
    // Points off the ellipse start -> p -> goal <= budget can never lie on a path.
    const auto admissible = [&](Point p) { return distance(start, p) + to_goal(p) <= opts.max_cost; };
    std::vector<int> near;
    for (int it = 0; it < samples; ++it) {
        Point sample = goal;
        if (rng.uniform() >= opts.goal_bias) {
            for (int attempt = 0; attempt < 32; ++attempt) {
                sample = {rng.uniform(0.0, map.rows() - 1), rng.uniform(0.0, map.cols() - 1)};
                if (admissible(sample)) {
                    break;
                }
            }
        }

        // Nearest by utility among nodes almost as close as the closest one.
        double d_min = std::numeric_limits<double>::infinity();
        for (const auto& n : tree.nodes()) {
            d_min = std::min(d_min, distance(n.position, sample));
        }
        Best from;
        for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
            const double d = distance(tree[i].position, sample);
            if (d <= d_min + opts.step) {
                from.offer(i, tree[i].utility, d);
            }
        }
        const auto landed = steer(map, tree[from.id].position, sample, opts.step);
        const Point z = landed.position;
        if (distance(z, tree[from.id].position) < 1e-9) {
            continue;
        }
        const int z_cell = cell_of(map, z);

        const double n = static_cast<double>(tree.size() + 1);
        const double radius = std::max(opts.step, std::min(opts.gamma * std::sqrt(std::log(n) / n), opts.near_cap));
        near.clear();
        for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
            if (i == from.id || distance(tree[i].position, z) <= radius) {
                near.push_back(i);
            }
        }

        Best parent;
        for (int i : near) {
            const double c = tree[i].cost + distance(tree[i].position, z);
            if (c + to_goal(z) <= opts.max_cost) {
                parent.offer(i, tree.utility_via(i, z_cell, map), c);
            }
        }
        if (parent.id < 0) {
            continue; // every candidate parent would break the budget
        }
        TreeNode node;
        node.position = z;
        node.cell = z_cell;
        node.parent = parent.id;
        node.utility = parent.utility;
        node.cost = parent.distance;
        const int zid = tree.add(node);
        if (opts.check_every_step) {
            tree.check_invariants(opts.max_cost);
        }

        for (int i : near) {
            if (tree.is_ancestor(i, zid)) {
                continue;
            }
            const double u = tree.utility_via(zid, tree[i].cell, map);
            const double c = tree[zid].cost + distance(z, tree[i].position);
            const bool better = u > tree[i].utility || (u == tree[i].utility && c < tree[i].cost - 1e-12);
            const double reach =
                tree.subtree_max(i, [&](const TreeNode& m) { return m.cost + to_goal(m.position); });
            if (!better || reach + (c - tree[i].cost) > opts.max_cost) {
                continue;
            }
            tree.reparent(i, zid);
            tree.refresh_subtree(i, map);
            ++out.rewires;
            if (opts.check_every_step) {
                tree.check_invariants(opts.max_cost);
            }
        }
    }
    finish(out, goal_cell);
    return out;
}

} // namespace detail

/// TMML-RRT*: expand from the highest-utility node near each sample,
/// attach new nodes to the near parent that maximizes collected utility,
/// and rewire neighbours through the new node when that raises their
/// utility. Returns the best node in the goal cell over all restarts.
inline PlanResult plan(const UtilityMap& map, Point start, Point goal, const PlannerOptions& opts, std::uint64_t seed)
{
    detail::require(opts.samples >= 1, "plan: samples must be >= 1");
    detail::require(opts.restarts >= 1, "plan: restarts must be >= 1");
    detail::require(opts.step > 0.0, "plan: step must be positive");
    detail::require(opts.max_cost >= 0.0, "plan: cost budget must be >= 0");
    const auto inside = [&](Point p) {
        return p.row >= 0.0 && p.col >= 0.0 && p.row <= map.rows() - 1 && p.col <= map.cols() - 1;
    };
    detail::require(inside(start), "plan: start lies outside the map");
    detail::require(inside(goal), "plan: goal lies outside the map");

    const int restarts = std::min(opts.restarts, opts.samples);
    PlanResult best;
    for (int r = 0; r < restarts; ++r) {
        const int share = opts.samples / restarts + (r < opts.samples % restarts ? 1 : 0);
        PlanResult run = detail::grow_tree(map, start, goal, opts, share, Rng::derive(seed, static_cast<std::uint64_t>(r)));
        const bool better = r == 0 || (run.found && !best.found) ||
                            (run.found == best.found &&
                             (run.utility > best.utility || (run.utility == best.utility && run.cost < best.cost)));
        if (better) {
            best = std::move(run);
        }
    }
    return best;
}

/// Best total utility over 4-connected simple grid paths from `start` to
/// `goal` visiting at most `max_cells` cells. Exhaustive; small grids only.
struct GridPathOptimum {
    double utility = -std::numeric_limits<double>::infinity();
    std::vector<int> cells;
    bool found() const noexcept { return !cells.empty(); }
};

inline GridPathOptimum best_grid_path(const UtilityMap& map, int start_cell, int goal_cell, int max_cells)
{
    detail::require(start_cell >= 0 && static_cast<std::size_t>(start_cell) < map.cell_count() && goal_cell >= 0 &&
                        static_cast<std::size_t>(goal_cell) < map.cell_count(),
                    "best_grid_path: cell out of range");
    detail::require(max_cells >= 1, "best_grid_path: max_cells must be >= 1");
    GridPathOptimum best;
    std::vector<char> used(map.cell_count(), 0);
    std::vector<int> path;
    const int cols = map.cols();
    const auto manhattan = [&](int a, int b) { return std::abs(a / cols - b / cols) + std::abs(a % cols - b % cols); };

    std::function<void(int, double)> walk = [&](int cell, double acc) {
        path.push_back(cell);
        used[static_cast<std::size_t>(cell)] = 1;
        acc += map[cell];
        if (cell == goal_cell) {
            if (acc > best.utility) {
                best.utility = acc;
                best.cells = path;
            }
        } else if (static_cast<int>(path.size()) + manhattan(cell, goal_cell) <= max_cells) {
            const int r = cell / cols;
            const int c = cell % cols;
            const int dr[] = {-1, 1, 0, 0};
            const int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k];
                const int nc = c + dc[k];
                if (nr < 0 || nc < 0 || nr >= map.rows() || nc >= cols) {
                    continue;
                }
                const int next = nr * cols + nc;
                if (!used[static_cast<std::size_t>(next)]) {
                    walk(next, acc);
                }
            }
        }
        used[static_cast<std::size_t>(cell)] = 0;
        path.pop_back();
    };
    walk(start_cell, 0.0);
    return best;
}

struct RecourseOptions {
    int horizon = 1000; ///< maximum number of moves
    double max_cost = std::numeric_limits<double>::infinity();
    UtilityWeights weights;
    PropagationPolicy policy;
};

struct RecourseStep {
    int step = 0;
    int node = 0;
    Point position;
    double utility = 0.0; ///< utility of the occupied cell at arrival
    double total_variance = 0.0;
};

struct RecourseResult {
    std::vector<int> executed; ///< node ids in visiting order
    std::vector<RecourseStep> trace;
    bool reached_goal = false;
    bool truncated = false;
    int replacements = 0;
};

/// Observations available when the agent stands on `cell` at `step`.
using ObserveFn = std::function<std::vector<Observation>(int cell, int step)>;

/// Executes `planned.path`. At every node the agent applies the
/// observations it receives, rebuilds the utility map and, when the map
/// changed, looks for a tree node within |X - S1| of its position whose
/// utility strictly beats the planned successor S1; the winner replaces S1
/// and becomes the parent of the second successor S2.
inline RecourseResult online_recourse(PlanResult& planned, BeliefMap& beliefs, const ObserveFn& observe,
                                      const RecourseOptions& opts)
{
    detail::require(planned.found && !planned.path.empty(), "online_recourse: no planned path to execute");
    detail::require(opts.horizon >= 0, "online_recourse: horizon must be >= 0");
    PlanTree& tree = planned.tree;
    std::vector<int>& path = planned.path;
    RecourseResult out;

    UtilityMap map = build_utility_map(beliefs, opts.weights);
    tree.refresh_subtree(0, map);
    std::vector<char> on_path(tree.size(), 0);
    for (int id : path) {
        on_path[static_cast<std::size_t>(id)] = 1;
    }

    std::size_t at = 0;
    for (int step = 0;; ++step) {
        const int x = path[at];
        bool changed = false;
        for (const auto& obs : observe(tree[x].cell, step)) {
            apply_observation(beliefs, obs, opts.policy);
            changed = true;
        }
        if (changed) {
            map = build_utility_map(beliefs, opts.weights);
            tree.refresh_subtree(0, map);
        }
        out.executed.push_back(x);
        out.trace.push_back({step, x, tree[x].position, map[tree[x].cell], beliefs.total_variance()});

        if (at + 1 == path.size()) {
            out.reached_goal = true;
            break;
        }
        if (step == opts.horizon) {
            out.truncated = true;
            break;
        }

        if (changed && at + 2 < path.size()) {
            const int s1 = path[at + 1];
            const int s2 = path[at + 2];
            const Point here = tree[x].position;
            const double region = distance(here, tree[s1].position);
            detail::Best cand;
            for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
                const double d = distance(here, tree[i].position);
                if (on_path[static_cast<std::size_t>(i)] || d > region || tree.is_ancestor(i, x) ||
                    tree.is_ancestor(s1, i)) {
                    continue;
                }
                const double cost_i = tree[x].cost + d;
                const double cost_s2 = cost_i + distance(tree[i].position, tree[s2].position);
                if (tree.subtree_max_cost(i) + (cost_i - tree[i].cost) > opts.max_cost ||
                    tree.subtree_max_cost(s2) + (cost_s2 - tree[s2].cost) > opts.max_cost) {
                    continue;
                }
                cand.offer(i, tree.utility_via(x, tree[i].cell, map), d);
            }
            if (cand.id >= 0 && cand.utility > tree[s1].utility) {
                tree.reparent(cand.id, x);
                tree.reparent(s2, cand.id);
                tree.refresh_subtree(cand.id, map);
                on_path[static_cast<std::size_t>(s1)] = 0;
                on_path[static_cast<std::size_t>(cand.id)] = 1;
                path[at + 1] = cand.id;
                ++out.replacements;
            }
        }
        ++at;
    }
    planned.utility = tree[path.back()].utility;
    planned.cost = tree[path.back()].cost;
    return out;
}

/// Ordered waypoints with per-step utility and cumulative cost.
inline nlohmann::json path_to_json(const PlanResult& result, const UtilityMap& map)
{
    nlohmann::json doc;
    doc["found"] = result.found;
    doc["utility"] = result.utility;
    doc["cost"] = result.cost;
    doc["tree_nodes"] = result.tree.size();
    auto& points = doc["waypoints"] = nlohmann::json::array();
    for (std::size_t k = 0; k < result.path.size(); ++k) {
        const auto& n = result.tree[result.path[k]];
        points.push_back({{"step", k},
                          {"row", n.position.row},
                          {"col", n.position.col},
                          {"cell", n.cell},
                          {"utility", map[n.cell]},
                          {"cumulative_utility", n.utility},
                          {"cumulative_cost", n.cost}});
    }
    return doc;
}

/// CSV trace with header step,x,y,utility,total_variance_remaining.
inline void write_trace_csv(std::ostream& os, const std::vector<RecourseStep>& steps)
{
    os << "step,x,y,utility,total_variance_remaining\n";
    const auto old_precision = os.precision(10);
    for (const auto& r : steps) {
        os << r.step << ',' << r.position.col << ',' << r.position.row << ',' << r.utility << ',' << r.total_variance
           << '\n';
    }
    os.precision(old_precision);
}

inline void write_recourse_csv(std::ostream& os, const RecourseResult& result) { write_trace_csv(os, result.trace); }

} // namespace tmml
