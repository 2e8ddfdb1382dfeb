#pragma once

// Per-cell, per-variable, per-stage beliefs (mean and variance) over a grid,
// plus the cluster bookkeeping the posterior engine and planner share.

#include <tmml/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tmml {

struct GridPos {
    int row = 0;
    int col = 0;
    friend bool operator==(const GridPos&, const GridPos&) = default;
};

class BeliefMap {
public:
    BeliefMap() = default;

    BeliefMap(int rows, int cols, std::vector<std::string> variables, int stages)
        : rows_(rows), cols_(cols), stages_(stages), variables_(std::move(variables))
    {
        detail::require(rows > 0 && cols > 0, "BeliefMap: grid must be non-empty");
        detail::require(!variables_.empty(), "BeliefMap: needs at least one variable");
        detail::require(stages > 0, "BeliefMap: needs at least one time stage");
        const std::size_t n = entry_count();
        mean_.assign(n, 0.0);
        var_.assign(n, 0.0);
        cluster_.assign(cell_count() * variable_count(), 0);
        set_cluster_count(1);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int stages() const noexcept { return stages_; }
    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }
    std::size_t variable_count() const noexcept { return variables_.size(); }
    std::size_t entry_count() const noexcept
    {
        return cell_count() * variable_count() * static_cast<std::size_t>(stages_);
    }
    const std::vector<std::string>& variables() const noexcept { return variables_; }

    /// Cells are numbered row-wise from zero.
    int cell_id(GridPos p) const { return p.row * cols_ + p.col; }
    GridPos position(int cell) const { return {cell / cols_, cell % cols_}; }
    bool contains(int cell) const { return cell >= 0 && static_cast<std::size_t>(cell) < cell_count(); }
    bool contains(GridPos p) const { return p.row >= 0 && p.row < rows_ && p.col >= 0 && p.col < cols_; }

    std::size_t index(int cell, int variable, int stage) const
    {
        return (static_cast<std::size_t>(cell) * variable_count() + static_cast<std::size_t>(variable))
                   * static_cast<std::size_t>(stages_)
               + static_cast<std::size_t>(stage);
    }

    double mean(int cell, int variable, int stage) const { return mean_[index(cell, variable, stage)]; }
    double variance(int cell, int variable, int stage) const { return var_[index(cell, variable, stage)]; }

    void set(int cell, int variable, int stage, double mean, double variance)
    {
        detail::require(std::isfinite(mean), "BeliefMap: non-finite mean");
        detail::require(std::isfinite(variance) && variance >= 0.0, "BeliefMap: variance must be >= 0");
        const auto i = index(cell, variable, stage);
        mean_[i] = mean;
        var_[i] = variance;
    }

    void set_variance(int cell, int variable, int stage, double variance)
    {
        detail::require(std::isfinite(variance) && variance >= 0.0, "BeliefMap: variance must be >= 0");
        var_[index(cell, variable, stage)] = variance;
    }

    /// Cluster of a cell as seen through one variable. Joint (multivariate)
    /// clusterings give every variable of a cell the same id; per-variable
    /// clusterings use disjoint id ranges.
    int cluster(int cell, int variable) const
    {
        return cluster_[static_cast<std::size_t>(cell) * variable_count() + static_cast<std::size_t>(variable)];
    }

    /// Same cluster id for all variables of each cell.
    void set_joint_clusters(const std::vector<int>& labels)
    {
        detail::require(labels.size() == cell_count(), "BeliefMap: one label per cell required");
        int top = 0;
        for (std::size_t c = 0; c < cell_count(); ++c) {
            detail::require(labels[c] >= 0, "BeliefMap: negative cluster id");
            top = std::max(top, labels[c]);
            for (std::size_t v = 0; v < variable_count(); ++v) {
                cluster_[c * variable_count() + v] = labels[c];
            }
        }
        set_cluster_count(top + 1);
    }

    /// One labelling per variable; ids are offset so clusters of different
    /// variables never coincide.
    void set_variable_clusters(const std::vector<std::vector<int>>& labels_per_variable)
    {
        detail::require(labels_per_variable.size() == variable_count(), "BeliefMap: one labelling per variable required");
        int offset = 0;
        for (std::size_t v = 0; v < variable_count(); ++v) {
            const auto& labels = labels_per_variable[v];
            detail::require(labels.size() == cell_count(), "BeliefMap: one label per cell required");
            int top = 0;
            for (std::size_t c = 0; c < cell_count(); ++c) {
                detail::require(labels[c] >= 0, "BeliefMap: negative cluster id");
                top = std::max(top, labels[c]);
                cluster_[c * variable_count() + v] = offset + labels[c];
            }
            offset += top + 1;
        }
        set_cluster_count(offset);
    }

    int cluster_count() const noexcept { return static_cast<int>(obs_count_.size()); }
    int observation_count(int cluster) const { return obs_count_.at(static_cast<std::size_t>(cluster)); }
    void record_observation(int cluster) { ++obs_count_.at(static_cast<std::size_t>(cluster)); }

    /// Cluster entropy as a percentage of its maximum.
    double cluster_entropy(int cluster) const { return entropy_.at(static_cast<std::size_t>(cluster)); }
    void set_cluster_entropy(std::vector<double> percents)
    {
        detail::require(percents.size() == obs_count_.size(), "BeliefMap: one entropy per cluster required");
        entropy_ = std::move(percents);
    }

    double total_variance() const
    {
        double s = 0.0;
        for (double v : var_) {
            s += v;
        }
        return s;
    }

    const std::vector<double>& variances() const noexcept { return var_; }
    const std::vector<double>& means() const noexcept { return mean_; }

    bool same_shape(const BeliefMap& other) const
    {
        return rows_ == other.rows_ && cols_ == other.cols_ && stages_ == other.stages_
               && variables_ == other.variables_;
    }

private:
    void set_cluster_count(int n)
    {
        obs_count_.assign(static_cast<std::size_t>(n), 0);
        entropy_.assign(static_cast<std::size_t>(n), 0.0);
    }

    int rows_ = 0;
    int cols_ = 0;
    int stages_ = 0;
    std::vector<std::string> variables_;
    std::vector<double> mean_;
    std::vector<double> var_;
    std::vector<int> cluster_;
    std::vector<int> obs_count_;
    std::vector<double> entropy_;
};

inline nlohmann::json to_json(const BeliefMap& map)
{
    using nlohmann::json;
    json cells = json::array();
    const int nv = static_cast<int>(map.variable_count());
    for (int c = 0; c < static_cast<int>(map.cell_count()); ++c) {
        json cluster = json::array();
        json mean = json::array();
        json var = json::array();
        for (int v = 0; v < nv; ++v) {
            cluster.push_back(map.cluster(c, v));
            json m = json::array();
            json s = json::array();
            for (int t = 0; t < map.stages(); ++t) {
                m.push_back(map.mean(c, v, t));
                s.push_back(map.variance(c, v, t));
            }
            mean.push_back(std::move(m));
            var.push_back(std::move(s));
        }
        cells.push_back({{"id", c}, {"cluster", std::move(cluster)}, {"mean", std::move(mean)}, {"var", std::move(var)}});
    }
    json entropy = json::array();
    json counts = json::array();
    for (int k = 0; k < map.cluster_count(); ++k) {
        entropy.push_back(map.cluster_entropy(k));
        counts.push_back(map.observation_count(k));
    }
    return {{"rows", map.rows()},
            {"cols", map.cols()},
            {"stages", map.stages()},
            {"variables", map.variables()},
            {"cluster_entropy_percent", std::move(entropy)},
            {"observation_counts", std::move(counts)},
            {"cells", std::move(cells)}};
}

inline BeliefMap belief_map_from_json(const nlohmann::json& doc)
{
    try {
        BeliefMap map(doc.at("rows").get<int>(), doc.at("cols").get<int>(),
                      doc.at("variables").get<std::vector<std::string>>(), doc.at("stages").get<int>());
        const auto& cells = doc.at("cells");
        detail::require(cells.size() == map.cell_count(), "BeliefMap JSON: cell count does not match grid");
        const int nv = static_cast<int>(map.variable_count());
        std::vector<std::vector<int>> labels(map.variable_count(), std::vector<int>(map.cell_count()));
        bool joint = true;
        for (const auto& cell : cells) {
            const int id = cell.at("id").get<int>();
            detail::require(map.contains(id), "BeliefMap JSON: cell id out of range");
            const auto cl = cell.at("cluster").get<std::vector<int>>();
            detail::require(static_cast<int>(cl.size()) == nv, "BeliefMap JSON: cluster list length mismatch");
            for (int v = 0; v < nv; ++v) {
                labels[static_cast<std::size_t>(v)][static_cast<std::size_t>(id)] = cl[static_cast<std::size_t>(v)];
                joint = joint && cl[static_cast<std::size_t>(v)] == cl.front();
                const auto& m = cell.at("mean").at(static_cast<std::size_t>(v));
                const auto& s = cell.at("var").at(static_cast<std::size_t>(v));
                detail::require(static_cast<int>(m.size()) == map.stages() && static_cast<int>(s.size()) == map.stages(),
                                "BeliefMap JSON: stage count mismatch");
                for (int t = 0; t < map.stages(); ++t) {
                    map.set(id, v, t, m.at(static_cast<std::size_t>(t)).get<double>(),
                            s.at(static_cast<std::size_t>(t)).get<double>());
                }
            }
        }
        if (joint) {
            map.set_joint_clusters(labels.front());
        } else {
            // Ids in the document are already globally unique; keep them.
            std::vector<std::vector<int>> rebased = labels;
            int offset = 0;
            for (auto& per_var : rebased) {
                int lo = per_var.empty() ? 0 : *std::min_element(per_var.begin(), per_var.end());
                int hi = per_var.empty() ? 0 : *std::max_element(per_var.begin(), per_var.end());
                detail::require(lo >= offset, "BeliefMap JSON: per-variable cluster ids overlap");
                for (int& l : per_var) {
                    l -= offset;
                }
                offset = hi + 1;
            }
            map.set_variable_clusters(rebased);
        }
        if (doc.contains("cluster_entropy_percent")) {
            map.set_cluster_entropy(doc.at("cluster_entropy_percent").get<std::vector<double>>());
        }
        if (doc.contains("observation_counts")) {
            const auto counts = doc.at("observation_counts").get<std::vector<int>>();
            detail::require(static_cast<int>(counts.size()) == map.cluster_count(),
                            "BeliefMap JSON: observation count list length mismatch");
            for (int k = 0; k < map.cluster_count(); ++k) {
                detail::require(counts[static_cast<std::size_t>(k)] >= 0, "BeliefMap JSON: negative observation count");
                for (int i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) {
                    map.record_observation(k);
                }
            }
        }
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("BeliefMap JSON: ") + e.what());
    }
}

} // namespace tmml
