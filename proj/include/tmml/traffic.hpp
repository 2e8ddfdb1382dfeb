#pragma once

// Link speed data: CSV ingestion into a links x intervals x days tensor, a
// synthetic correlated-links generator, and the KF with/without TML
// comparison built on top of both.

#include <tmml/error.hpp>
#include <tmml/kalman.hpp>
#include <tmml/mixture.hpp>
#include <tmml/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tmml {

/// Dense speeds with an explicit missing mask. Links keep the order in
/// which they first appear in the input; days are sorted.
class SpeedTensor {
public:
    SpeedTensor() = default;
    SpeedTensor(std::vector<std::string> link_ids, int intervals, std::vector<long long> day_labels)
        : links_(std::move(link_ids)), days_(std::move(day_labels)), intervals_(intervals)
    {
        detail::require(intervals > 0, "SpeedTensor: need at least one interval");
        values_.assign(size(), 0.0);
        present_.assign(size(), 0);
    }

    int links() const noexcept { return static_cast<int>(links_.size()); }
    int intervals() const noexcept { return intervals_; }
    int days() const noexcept { return static_cast<int>(days_.size()); }
    std::size_t size() const noexcept
    {
        return links_.size() * static_cast<std::size_t>(intervals_) * days_.size();
    }
    const std::vector<std::string>& link_ids() const noexcept { return links_; }
    const std::vector<long long>& day_labels() const noexcept { return days_; }

    std::size_t index(int link, int interval, int day) const
    {
        return (static_cast<std::size_t>(link) * static_cast<std::size_t>(intervals_)
                + static_cast<std::size_t>(interval))
                   * days_.size()
               + static_cast<std::size_t>(day);
    }

    bool present(int link, int interval, int day) const { return present_[index(link, interval, day)] != 0; }
    double at(int link, int interval, int day) const { return values_[index(link, interval, day)]; }
    std::optional<double> get(int link, int interval, int day) const
    {
        return present(link, interval, day) ? std::optional<double>(at(link, interval, day)) : std::nullopt;
    }

    void set(int link, int interval, int day, double speed)
    {
        const auto i = index(link, interval, day);
        values_[i] = speed;
        present_[i] = 1;
    }

    std::size_t missing_count() const
    {
        return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), 0));
    }

    friend bool operator==(const SpeedTensor&, const SpeedTensor&) = default;

private:
    std::vector<std::string> links_;
    std::vector<long long> days_;
    int intervals_ = 0;
    std::vector<double> values_;
    std::vector<char> present_;
};

struct IngestResult {
    SpeedTensor tensor;
    /// Rows that repeated an earlier (link, day, interval); the later row wins.
    int duplicates = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        const auto a = f.find_first_not_of(" \t");
        const auto b = f.find_last_not_of(" \t");
        f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
    }
    return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out)
{
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

} // namespace detail

/// Reads `link_id,day,interval_index,speed_mph` rows (header required).
inline IngestResult ingest_speed_csv(std::istream& in, int intervals, const std::string& source = "input")
{
    detail::require(intervals > 0, "ingest_speed_csv: intervals must be positive");
    std::string line;
    int lineno = 0;
    const auto fail = [&](const std::string& why) {
        throw ValidationError(source + ":" + std::to_string(lineno) + ": " + why);
    };

    bool header = false;
    while (!header && std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cols = detail::split_csv_line(line);
        if (cols != std::vector<std::string>{"link_id", "day", "interval_index", "speed_mph"}) {
            fail("expected header link_id,day,interval_index,speed_mph");
        }
        header = true;
    }
    if (!header) {
        throw ValidationError(source + ": empty file");
    }

    struct Row {
        std::string link;
        long long day;
        int interval;
        double speed;
    };
    std::vector<Row> rows;
    std::vector<std::string> links;
    std::vector<long long> days;
    std::map<std::string, int> link_index;
    std::map<long long, int> day_index;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cols = detail::split_csv_line(line);
        if (cols.size() != 4) {
            fail("expected 4 fields, got " + std::to_string(cols.size()));
        }
        Row r;
        r.link = cols[0];
        if (r.link.empty()) {
            fail("empty link_id");
        }
        if (!detail::parse_number(cols[1], r.day)) {
            fail("day is not an integer: '" + cols[1] + "'");
        }
        if (!detail::parse_number(cols[2], r.interval)) {
            fail("interval_index is not an integer: '" + cols[2] + "'");
        }
        if (r.interval < 0 || r.interval >= intervals) {
            fail("interval_index " + cols[2] + " outside 0.." + std::to_string(intervals - 1));
        }
        if (!detail::parse_number(cols[3], r.speed) || !std::isfinite(r.speed) || r.speed < 0.0) {
            fail("speed_mph must be a non-negative number: '" + cols[3] + "'");
        }
        if (link_index.emplace(r.link, static_cast<int>(links.size())).second) {
            links.push_back(r.link);
        }
        days.push_back(r.day);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        throw ValidationError(source + ": no data rows");
    }

    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    for (std::size_t d = 0; d < days.size(); ++d) {
        day_index[days[d]] = static_cast<int>(d);
    }

    IngestResult out{SpeedTensor(links, intervals, days), 0};
    for (const auto& r : rows) {
        const int l = link_index[r.link];
        const int d = day_index[r.day];
        if (out.tensor.present(l, r.interval, d)) {
            ++out.duplicates;
        }
        out.tensor.set(l, r.interval, d, r.speed);
    }
    return out;
}

inline IngestResult ingest_speed_csv(const std::string& path, int intervals)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open speed file '" + path + "'");
    }
    return ingest_speed_csv(in, intervals, path);
}

/// Writes present entries in link, day, interval order; re-ingesting the
/// output reproduces the tensor exactly.
inline void write_speed_csv(std::ostream& os, const SpeedTensor& t)
{
    os << "link_id,day,interval_index,speed_mph\n";
    const auto old_precision = os.precision(17);
    for (int l = 0; l < t.links(); ++l) {
        for (int d = 0; d < t.days(); ++d) {
            for (int i = 0; i < t.intervals(); ++i) {
                if (t.present(l, i, d)) {
                    os << t.link_ids()[static_cast<std::size_t>(l)] << ',' << t.day_labels()[static_cast<std::size_t>(d)]
                       << ',' << i << ',' << t.at(l, i, d) << '\n';
                }
            }
        }
    }
    os.precision(old_precision);
}

/// Synthetic freeway: links in groups that congest together. Each group
/// has a free-flow speed, a congestion drop and a congestion window; on a
/// given day each group congests with `congestion_probability`.
struct TrafficConfig {
    int links = 39;
    int intervals = 24;
    int history_days = 40;
    std::vector<double> group_free_speed{60.0, 62.0, 58.0};
    std::vector<double> group_drop{25.0, 15.0, 35.0};
    std::vector<int> group_window_start{4, 6, 8};
    int window_length = 10;
    double congestion_probability = 0.5;
    double link_spread = 1.0;
    double drop_spread = 2.0;
    double day_noise_sd = 1.5;
    double sensor_sd = 6.0;

    void validate() const
    {
        detail::require(links > 0 && intervals > 0 && history_days > 0, "TrafficConfig: sizes must be positive");
        const std::size_t g = group_free_speed.size();
        detail::require(g > 0 && group_drop.size() == g && group_window_start.size() == g,
                        "TrafficConfig: group lists must have equal, non-zero length");
        detail::require(congestion_probability >= 0.0 && congestion_probability <= 1.0,
                        "TrafficConfig: congestion_probability must lie in [0, 1]");
        detail::require(sensor_sd >= 0.0 && day_noise_sd >= 0.0, "TrafficConfig: noise must be >= 0");
    }
};

struct TrafficData {
    /// Observed speeds; days 0..history_days-1 are history, the last day is
    /// the day being predicted.
    SpeedTensor observed;
    /// Noise-free speeds of the predicted day, [link][interval].
    std::vector<std::vector<double>> truth;
    std::vector<int> group;
};

inline TrafficData gen_traffic_speeds(const TrafficConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Rng rng(seed);
    const int groups = static_cast<int>(cfg.group_free_speed.size());
    const auto L = static_cast<std::size_t>(cfg.links);

    std::vector<int> group(L);
    std::vector<double> free(L);
    std::vector<double> drop(L);
    for (std::size_t c = 0; c < L; ++c) {
        group[c] = static_cast<int>(c) % groups;
        const auto g = static_cast<std::size_t>(group[c]);
        free[c] = cfg.group_free_speed[g] + rng.uniform(-cfg.link_spread, cfg.link_spread);
        drop[c] = cfg.group_drop[g] + rng.uniform(-cfg.drop_spread, cfg.drop_spread);
    }

    std::vector<std::string> ids;
    for (int c = 0; c < cfg.links; ++c) {
        ids.push_back("L" + std::string(c < 10 ? "0" : "") + std::to_string(c));
    }
    std::vector<long long> day_labels(static_cast<std::size_t>(cfg.history_days) + 1);
    std::iota(day_labels.begin(), day_labels.end(), 0LL);

    TrafficData out{SpeedTensor(ids, cfg.intervals, day_labels), {}, group};
    for (int d = 0; d <= cfg.history_days; ++d) {
        std::vector<bool> congested(static_cast<std::size_t>(groups));
        for (auto&& c : congested) {
            c = rng.uniform() < cfg.congestion_probability;
        }
        std::vector<std::vector<double>> day(L, std::vector<double>(static_cast<std::size_t>(cfg.intervals)));
        for (std::size_t c = 0; c < L; ++c) {
            const auto g = static_cast<std::size_t>(group[c]);
            for (int t = 0; t < cfg.intervals; ++t) {
                const int s = cfg.group_window_start[g];
                const bool on = congested[g] && t >= s && t < s + cfg.window_length;
                day[c][static_cast<std::size_t>(t)] = free[c] - (on ? drop[c] : 0.0) + rng.normal(0.0, cfg.day_noise_sd);
            }
        }
        for (std::size_t c = 0; c < L; ++c) {
            for (int t = 0; t < cfg.intervals; ++t) {
                const double z = day[c][static_cast<std::size_t>(t)] + rng.normal(0.0, cfg.sensor_sd);
                out.observed.set(static_cast<int>(c), t, d, std::max(0.0, z));
            }
        }
        if (d == cfg.history_days) {
            out.truth = std::move(day);
        }
    }
    return out;
}

/// How the second (TML) update summarizes correlated links.
enum class ClusterVariance {
    sample,  ///< sample variance of the member speeds
    of_mean, ///< sample variance divided by the member count
};

struct KfExperimentOptions {
    KfParams params = KfParams::defaults();
    /// Histogram bins over [0, speed_max) used to cluster (link, interval) items.
    int bins = 16;
    double speed_max = 80.0;
    std::vector<int> k_range{2, 3, 4, 5, 6, 7, 8};
    EmOptions em{200, 1e-6, 3};
    /// Same-cluster observations from earlier intervals of the predicted day
    /// needed before they replace the historical cluster sample.
    int min_members = 3;
    ClusterVariance cluster_variance = ClusterVariance::sample;
};

struct KfLinkTrace {
    std::string link_id;
    KfMode mode = KfMode::no_tml;
    std::vector<KfTraceRow> rows;
};

struct KfExperimentResult {
    std::vector<KfLinkTrace> traces;
    /// [link][interval] cluster label of each (link, interval) item.
    std::vector<std::vector<int>> labels;
    int k = 0;
    double mae_no_tml = 0.0;
    double mae_tml = 0.0;
    /// Share of TML intervals whose second update reduced P(1,1).
    double delta_p_positive = 0.0;
    int compared = 0;
};

namespace detail {

inline double mean_of(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size() - 1);
}

} // namespace detail

/// KF with and without TML on the last day of `speeds`, using the earlier
/// days as history. Errors are measured against `truth` when given, else
/// against the last day's observations.
inline KfExperimentResult run_kf_experiment(const SpeedTensor& speeds,
                                            const std::vector<std::vector<double>>* truth,
                                            const KfExperimentOptions& opts, std::uint64_t seed)
{
    detail::require(speeds.days() >= 2, "run_kf_experiment: need at least one history day and one test day");
    detail::require(opts.bins >= 2 && opts.speed_max > 0.0, "run_kf_experiment: bad histogram settings");
    const int L = speeds.links();
    const int T = speeds.intervals();
    const int today = speeds.days() - 1;

    std::vector<std::vector<double>> history(static_cast<std::size_t>(L * T));
    std::vector<Histogram> hist;
    for (int c = 0; c < L; ++c) {
        for (int t = 0; t < T; ++t) {
            auto& h = history[static_cast<std::size_t>(c * T + t)];
            Histogram counts(static_cast<std::size_t>(opts.bins), 0.0);
            for (int d = 0; d < today; ++d) {
                if (const auto v = speeds.get(c, t, d)) {
                    h.push_back(*v);
                    const int b = static_cast<int>(*v / opts.speed_max * opts.bins);
                    counts[static_cast<std::size_t>(std::clamp(b, 0, opts.bins - 1))] += 1.0;
                }
            }
            if (h.empty()) {
                throw ValidationError("run_kf_experiment: link " + speeds.link_ids()[static_cast<std::size_t>(c)]
                                      + " has no history at interval " + std::to_string(t));
            }
            hist.push_back(std::move(counts));
        }
    }

    std::vector<int> ks;
    for (int k : opts.k_range) {
        if (k >= 1 && static_cast<std::size_t>(k) <= hist.size()) {
            ks.push_back(k);
        }
    }
    detail::require(!ks.empty(), "run_kf_experiment: no usable K in k_range");
    const auto sel = select_k(hist, ks, seed, opts.em);

    KfExperimentResult out;
    out.k = sel.best_k;
    out.labels.assign(static_cast<std::size_t>(L), std::vector<int>(static_cast<std::size_t>(T)));
    for (int c = 0; c < L; ++c) {
        for (int t = 0; t < T; ++t) {
            out.labels[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]
                = sel.fit.assignment.labels[static_cast<std::size_t>(c * T + t)];
        }
    }
    const auto label = [&](int c, int t) { return out.labels[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]; };

    const auto summarize = [&](const std::vector<double>& v) {
        double var = detail::sample_variance(v);
        if (opts.cluster_variance == ClusterVariance::of_mean) {
            var /= static_cast<double>(v.size());
        }
        return ClusterObservation{detail::mean_of(v), var};
    };

    double err_plain = 0.0;
    double err_tml = 0.0;
    int positive = 0;
    int tml_rows = 0;
    for (int c = 0; c < L; ++c) {
        std::vector<std::optional<Measurement>> own(static_cast<std::size_t>(T));
        std::vector<std::optional<Measurement>> hist_z(static_cast<std::size_t>(T));
        std::vector<std::optional<ClusterObservation>> plus(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            if (const auto v = speeds.get(c, t, today)) {
                own[static_cast<std::size_t>(t)] = Measurement{*v, std::nullopt};
            }
            const auto& h = history[static_cast<std::size_t>(c * T + t)];
            hist_z[static_cast<std::size_t>(t)] = Measurement{detail::mean_of(h), detail::sample_variance(h)};

            std::vector<double> members;
            for (int c2 = 0; c2 < L; ++c2) {
                for (int t2 = 0; t2 < t; ++t2) {
                    if (label(c2, t2) == label(c, t)) {
                        if (const auto v = speeds.get(c2, t2, today)) {
                            members.push_back(*v);
                        }
                    }
                }
            }
            if (static_cast<int>(members.size()) < opts.min_members) {
                members.clear();
                for (int c2 = 0; c2 < L; ++c2) {
                    for (int t2 = 0; t2 < T; ++t2) {
                        if (label(c2, t2) == label(c, t)) {
                            const auto& h2 = history[static_cast<std::size_t>(c2 * T + t2)];
                            members.insert(members.end(), h2.begin(), h2.end());
                        }
                    }
                }
            }
            if (members.size() >= 2) {
                plus[static_cast<std::size_t>(t)] = summarize(members);
            }
        }

        KfLinkTrace plain{speeds.link_ids()[static_cast<std::size_t>(c)], KfMode::no_tml,
                          run_series(own, {}, opts.params, KfMode::no_tml)};
        KfLinkTrace tml{plain.link_id, KfMode::tml, run_series(hist_z, plus, opts.params, KfMode::tml)};
        for (int t = 0; t < T; ++t) {
            double target = 0.0;
            if (truth) {
                target = (*truth)[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
            } else if (const auto v = speeds.get(c, t, today)) {
                target = *v;
            } else {
                continue;
            }
            err_plain += std::abs(plain.rows[static_cast<std::size_t>(t)].prediction - target);
            err_tml += std::abs(tml.rows[static_cast<std::size_t>(t)].prediction - target);
            ++out.compared;
        }
        for (const auto& row : tml.rows) {
            ++tml_rows;
            positive += row.delta_p > 0.0 ? 1 : 0;
        }
        out.traces.push_back(std::move(plain));
        out.traces.push_back(std::move(tml));
    }
    if (out.compared == 0) {
        throw ValidationError("run_kf_experiment: the test day has no observations to score against");
    }
    out.mae_no_tml = err_plain / out.compared;
    out.mae_tml = err_tml / out.compared;
    out.delta_p_positive = static_cast<double>(positive) / tml_rows;
    return out;
}

/// CSV rows `link_id,interval_index,mode,prediction,p11,delta_p`.
inline void write_kf_trace_csv(std::ostream& os, const std::vector<KfLinkTrace>& traces)
{
    os << "link_id,interval_index,mode,prediction,p11,delta_p\n";
    const auto old_precision = os.precision(10);
    for (const auto& tr : traces) {
        for (const auto& r : tr.rows) {
            os << tr.link_id << ',' << r.interval << ',' << to_string(tr.mode) << ',' << r.prediction << ','
               << r.p11 << ',' << r.delta_p << '\n';
        }
    }
    os.precision(old_precision);
}

} // namespace tmml
