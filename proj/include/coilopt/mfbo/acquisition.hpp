#pragma once

#include "coilopt/mfbo/models.hpp"
#include "coilopt/optim/box_search.hpp"
#include "coilopt/optim/lhs.hpp"
#include "coilopt/random.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

namespace coilopt::mfbo {

// Sign convention: the objective GP models y = -f, so every "best" below is a
// maximum of y. The optimistic bound is measured from the worst observed y,
// which keeps the numerator positive; a negative numerator divided by a cost
// would otherwise prefer expensive queries.

inline double acquisition_value(double optimistic, double cost, double correlation, double epsilon) {
    const double discount = std::max(epsilon, std::sqrt(std::max(0.0, 1.0 - correlation * correlation)));
    return optimistic / (cost * discount);
}

struct AcquisitionParts {
    double mean = 0.0;        ///< posterior mean of y at (x, z_top)
    double stddev = 0.0;
    double optimistic = 0.0;  ///< mean + sqrt(beta) stddev - worst observed y, floored
    double cost = 0.0;        ///< exp of the log-cost posterior mean at (x, z)
    double correlation = 0.0;
    double value = 0.0;
};

inline constexpr double kOptimisticFloor = 1e-9;

inline AcquisitionParts acquisition(const Eigen::VectorXd& x, const flow::FidelityVector& z, const SurrogateModels& m,
                                    double beta, double epsilon) {
    AcquisitionParts a;
    std::tie(a.mean, a.stddev) = m.objective_at_top(x);
    a.optimistic = std::max(a.mean + std::sqrt(beta) * a.stddev - m.worst_observed(), kOptimisticFloor);
    a.cost = m.predicted_cost(x, z);
    a.correlation = m.fidelity_correlation(z);
    a.value = acquisition_value(a.optimistic, a.cost, a.correlation, epsilon);
    return a;
}

struct AcquisitionChoice {
    Eigen::VectorXd x;
    flow::FidelityVector z;
    double value = 0.0;
    std::vector<double> start_values;  ///< acquisition at each LHS start
    bool fallback = false;             ///< no finite start; returned the first LHS point
};

namespace detail {

inline Eigen::VectorXd to_box(const Eigen::VectorXd& u, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return lo.array() + u.array() * (hi - lo).array();
}

// Best `keep` indices by descending value, ties broken by index.
inline std::vector<std::size_t> top_indices(const std::vector<double>& v, int keep) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    idx.resize(std::min(idx.size(), static_cast<std::size_t>(std::max(keep, 0))));
    return idx;
}

}  // namespace detail

/// Multi-start maximization of the acquisition over the joint box: LHS
/// starts, then a compass polish of the best few.
inline AcquisitionChoice maximize_acquisition(const SurrogateModels& m, const CampaignConfig& cfg, std::uint64_t seed) {
    const auto& space = m.space();
    const Eigen::VectorXd lo = space.joint_lo();
    const Eigen::VectorXd hi = space.joint_hi();
    const int nx = space.x_dim();

    auto value_at = [&](const Eigen::VectorXd& p) {
        const flow::FidelityVector z{p[nx], p[nx + 1]};
        const double v = acquisition(p.head(nx), z, m, cfg.beta, cfg.epsilon_gamma).value;
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };

    Rng rng(seed);
    const Eigen::MatrixXd starts = optim::latin_hypercube(cfg.acquisition_starts, space.dim(), rng);
    AcquisitionChoice out;
    Eigen::VectorXd best_p;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < starts.rows(); ++i) {
        const Eigen::VectorXd p = detail::to_box(starts.row(i).transpose(), lo, hi);
        const double v = value_at(p);
        out.start_values.push_back(v);
        if (v > best) {
            best = v;
            best_p = p;
        }
    }
    if (!std::isfinite(best)) {
        out.fallback = true;
        best_p = detail::to_box(starts.row(0).transpose(), lo, hi);
    } else {
        optim::CoordinateSearchOptions opt;
        opt.initial_step = 0.1;
        opt.min_step = 1e-3;
        opt.max_evaluations = 400;
        for (auto i : detail::top_indices(out.start_values, cfg.polish_starts)) {
            if (!std::isfinite(out.start_values[i])) continue;
            const Eigen::VectorXd p0 = detail::to_box(starts.row(static_cast<Eigen::Index>(i)).transpose(), lo, hi);
            const auto r = optim::minimize_coordinate([&](const Eigen::VectorXd& p) { return -value_at(p); }, p0, lo, hi, opt);
            if (-r.value > best) {
                best = -r.value;
                best_p = r.x;
            }
        }
    }
    out.x = best_p.head(nx);
    out.z = {best_p[nx], best_p[nx + 1]};
    out.value = best;
    return out;
}

struct PredictedBest {
    Eigen::VectorXd x;
    double mean_y = 0.0;  ///< posterior mean of -f at z_top
    double cost = 0.0;    ///< predicted cost of evaluating x at z_top
};

/// Posterior-mean maximizer over X at the top fidelity. Starts from the
/// best-predicted evaluated points and an LHS batch.
inline PredictedBest predicted_best(const SurrogateModels& m, const std::vector<Eigen::VectorXd>& evaluated,
                                    const CampaignConfig& cfg, std::uint64_t seed) {
    const auto& space = m.space();
    const int nx = space.x_dim();
    auto mean_at = [&](const Eigen::VectorXd& x) { return m.objective_at_top(x).first; };

    std::vector<Eigen::VectorXd> starts = evaluated;
    Rng rng(seed);
    const Eigen::MatrixXd u = optim::latin_hypercube(std::max(cfg.acquisition_starts / 2, 1), nx, rng);
    for (int i = 0; i < u.rows(); ++i) starts.push_back(detail::to_box(u.row(i).transpose(), space.x_lo, space.x_hi));

    std::vector<double> values;
    values.reserve(starts.size());
    for (const auto& s : starts) values.push_back(mean_at(s));

    PredictedBest best;
    best.mean_y = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < starts.size(); ++i)
        if (values[i] > best.mean_y) {
            best.mean_y = values[i];
            best.x = starts[i];
        }

    optim::CoordinateSearchOptions opt;
    opt.initial_step = 0.1;
    opt.min_step = 1e-3;
    opt.max_evaluations = 400;
    for (auto i : detail::top_indices(values, cfg.polish_starts)) {
        const auto r = optim::minimize_coordinate([&](const Eigen::VectorXd& x) { return -mean_at(x); }, starts[i],
                                                  space.x_lo, space.x_hi, opt);
        if (-r.value > best.mean_y) {
            best.mean_y = -r.value;
            best.x = r.x;
        }
    }
    best.cost = m.predicted_cost(best.x, space.top_fidelity());
    return best;
}

/// True when the remaining budget can no longer cover p_c top-fidelity
/// evaluations at the predicted cost.
inline bool should_stop(double remaining, double predicted_top_cost, double p_c) {
    return remaining < p_c * predicted_top_cost;
}

}  // namespace coilopt::mfbo
