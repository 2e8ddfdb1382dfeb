#pragma once

// Two-state (speed, acceleration) Kalman filter with an optional second
// measurement update fed by the mean and variance of same-cluster links.

#include <tmml/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tmml {

struct KalmanState {
    Eigen::Vector2d x = Eigen::Vector2d::Zero(); ///< speed (mph), acceleration (mph per interval)
    Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
};

struct KfParams {
    Eigen::Matrix2d A;
    Eigen::Vector2d B;
    Eigen::Matrix2d Q;
    Eigen::RowVector2d H;
    double R = 1.0;

    static KfParams defaults()
    {
        KfParams p;
        p.A << 1.0, 1.0, 0.0, 1.0;
        p.B = Eigen::Vector2d::Zero();
        p.Q << 0.04, 0.0, 0.0, 1.0;
        p.H << 1.0, 0.0;
        p.R = 1.0;
        return p;
    }
};

/// Aggregate of the speeds observed on the current link-interval's cluster.
struct ClusterObservation {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {

inline void check_covariance(const Eigen::Matrix2d& P, const char* where)
{
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if (!P.allFinite() || std::abs(P(0, 1) - P(1, 0)) > 1e-9 * scale) {
        throw NumericError(std::string(where) + ": covariance lost symmetry");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
        throw NumericError(std::string(where) + ": covariance is not positive semidefinite");
    }
}

} // namespace detail

inline KalmanState predict(const KalmanState& state, const KfParams& params, double control = 0.0)
{
    KalmanState prior;
    prior.x = params.A * state.x + params.B * control;
    prior.P = params.A * state.P * params.A.transpose() + params.Q;
    detail::check_covariance(prior.P, "predict");
    return prior;
}

/// K = P^- H^T (H P^- H^T + R)^-1 for a scalar measurement. An infinite R
/// yields a zero gain.
inline Eigen::Vector2d gain(const Eigen::Matrix2d& P_minus, const Eigen::RowVector2d& H, double R)
{
    detail::require(R >= 0.0, "gain: measurement variance must be >= 0");
    if (std::isinf(R)) {
        return Eigen::Vector2d::Zero();
    }
    const double innovation = (H * P_minus * H.transpose())(0, 0) + R;
    if (!(innovation > 0.0)) {
        throw NumericError("gain: singular innovation covariance");
    }
    return P_minus * H.transpose() / innovation;
}

/// Scalar measurement update with an explicit measurement variance.
inline KalmanState measurement_update(const KalmanState& prior, double z, double R, const Eigen::RowVector2d& H)
{
    const double innovation = z - (H * prior.x)(0, 0);
    const double S = (H * prior.P * H.transpose())(0, 0) + R;
    // A certain prior confirmed by a certain measurement carries no new information.
    if (S == 0.0 && std::abs(innovation) <= 1e-9 * std::max(1.0, std::abs(z))) {
        return prior;
    }
    const Eigen::Vector2d K = gain(prior.P, H, R);
    KalmanState post;
    post.x = prior.x + K * (z - (H * prior.x)(0, 0));
    post.P = (Eigen::Matrix2d::Identity() - K * H) * prior.P;
    detail::check_covariance(post.P, "update");
    return post;
}

inline KalmanState update(const KalmanState& prior, double z, const KfParams& params)
{
    return measurement_update(prior, z, params.R, params.H);
}

/// Second update whose measurement variance is the cluster aggregate's.
inline KalmanState tml_update(const KalmanState& posterior1, const ClusterObservation& z_plus, const KfParams& params)
{
    return measurement_update(posterior1, z_plus.mean, z_plus.variance, params.H);
}

/// Percentage reduction in P(1,1) due to the extra information.
inline double delta_p(double p11_without, double p11_with)
{
    if (!(p11_without > 0.0)) {
        throw NumericError("delta_p: P(1,1) without information gain must be positive");
    }
    return 100.0 * (p11_without - p11_with) / p11_without;
}

enum class KfMode { no_tml, tml };

inline const char* to_string(KfMode mode) { return mode == KfMode::tml ? "tml" : "no_tml"; }

inline KfMode parse_kf_mode(const std::string& s)
{
    if (s == "tml") {
        return KfMode::tml;
    }
    if (s == "no_tml" || s == "notml" || s == "no-tml") {
        return KfMode::no_tml;
    }
    throw ValidationError("unknown KF mode '" + s + "' (expected tml or no_tml)");
}

/// A scalar speed measurement; without a variance the filter's R is used.
struct Measurement {
    double value = 0.0;
    std::optional<double> variance;
};

struct KfTraceRow {
    int interval = 0;
    double prediction = 0.0; ///< final speed estimate for the interval
    double p11 = 0.0;        ///< final P(1,1)
    double p11_first = 0.0;  ///< P(1,1) after the first update
    double delta_p = 0.0;    ///< reduction of p11 relative to p11_first
    bool cluster_used = false;
};

/// Runs predict -> update (-> tml_update in tml mode) over the intervals.
/// Missing measurements skip that update. The initial state is
/// [first available measurement, 0] with P = I.
inline std::vector<KfTraceRow> run_series(std::span<const std::optional<Measurement>> measurements,
                                          std::span<const std::optional<ClusterObservation>> cluster_obs,
                                          const KfParams& params, KfMode mode)
{
    detail::require(!measurements.empty(), "run_series: empty series");
    detail::require(cluster_obs.empty() || cluster_obs.size() == measurements.size(),
                    "run_series: cluster observations must match the series length");

    KalmanState state;
    for (const auto& m : measurements) {
        if (m) {
            state.x << m->value, 0.0;
            break;
        }
    }
    state.P = Eigen::Matrix2d::Identity();

    std::vector<KfTraceRow> trace;
    trace.reserve(measurements.size());
    for (std::size_t t = 0; t < measurements.size(); ++t) {
        KalmanState s = predict(state, params);
        if (const auto& m = measurements[t]) {
            s = measurement_update(s, m->value, m->variance.value_or(params.R), params.H);
        }
        KfTraceRow row;
        row.interval = static_cast<int>(t);
        row.p11_first = s.P(0, 0);
        if (mode == KfMode::tml && !cluster_obs.empty() && cluster_obs[t]) {
            s = tml_update(s, *cluster_obs[t], params);
            row.cluster_used = true;
        }
        row.prediction = s.x(0);
        row.p11 = s.P(0, 0);
        row.delta_p = row.p11_first > 0.0 ? delta_p(row.p11_first, row.p11) : 0.0;
        trace.push_back(row);
        state = s;
    }
    return trace;
}

} // namespace tmml
