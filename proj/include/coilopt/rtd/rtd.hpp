#pragma once

// Residence-time distributions: dimensionless normalization, the
// tanks-in-series model, its least-squares fit, and the composite objective
//     f = (alpha / d) * sum (E_i - E_hat_i(N*))^2 - N*
// which is minimized by the optimizer.

#include "coilopt/errors.hpp"
#include "coilopt/optim/box_search.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace coilopt::rtd {

inline constexpr int kResampledPoints = 100;
inline constexpr double kDefaultAlpha = 100.0;
inline constexpr double kMinTanks = 1.0;
inline constexpr double kMaxTanks = 600.0;

/// Raw outlet trace: concentration against time (s).
struct TimeSeries {
    std::vector<double> time;
    std::vector<double> concentration;
};

/// Dimensionless RTD: E(theta) sampled at increasing theta.
struct RTDCurve {
    std::vector<double> theta;
    std::vector<double> e;

    std::size_t size() const { return theta.size(); }
};

struct TanksFit {
    double n_star = 1.0;
    double mse = 0.0;
    double f = 0.0;
    double alpha = kDefaultAlpha;
    bool ill_posed = false;  ///< residual flat across the scan; n_star forced to 1
};

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline double first_moment(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (x[i] * y[i] + x[i - 1] * y[i - 1]);
    return s;
}

/// Linear interpolation; zero outside the sampled range (no tracer has
/// arrived before the first sample, none remains after the last).
inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double q) {
    if (x.empty() || q < x.front() || q > x.back()) return 0.0;
    auto it = std::upper_bound(x.begin(), x.end(), q);
    if (it == x.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    const double t = (q - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}

/// t_mean = int tC dt / int C dt, theta = t / t_mean, E = C t_mean / int C dt,
/// then resampled by linear interpolation onto `points` uniform theta values
/// over [0, theta_last].
inline RTDCurve normalize_rtd(const TimeSeries& series, int points = kResampledPoints) {
    const auto& t = series.time;
    const auto& c = series.concentration;
    if (t.size() != c.size()) throw InvalidArgument("time and concentration lengths differ");
    if (t.size() < 8) throw InvalidArgument("an RTD needs at least 8 samples, got " + std::to_string(t.size()));
    if (points < 2) throw InvalidArgument("resampling needs at least 2 points");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(c[i])) throw InvalidArgument("non-finite sample at index " + std::to_string(i));
        if (c[i] < 0.0) throw InvalidArgument("negative concentration at index " + std::to_string(i));
        if (i > 0 && !(t[i] > t[i - 1])) throw InvalidArgument("time must be strictly increasing (index " + std::to_string(i) + ")");
    }
    if (t.front() < 0.0) throw InvalidArgument("time must be non-negative");

    const double area = trapezoid(t, c);
    if (!(area > 0.0)) throw EmptyTrace("outlet trace has zero total area");
    const double t_mean = first_moment(t, c) / area;

    std::vector<double> theta(t.size()), e(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        theta[i] = t[i] / t_mean;
        e[i] = c[i] * t_mean / area;
    }

    RTDCurve out;
    out.theta.resize(static_cast<std::size_t>(points));
    out.e.resize(static_cast<std::size_t>(points));
    const double last = theta.back();
    for (int k = 0; k < points; ++k) {
        const double q = last * k / (points - 1);
        out.theta[static_cast<std::size_t>(k)] = q;
        out.e[static_cast<std::size_t>(k)] = interpolate(theta, e, q);
    }
    out.theta.back() = last;
    return out;
}

namespace detail {
inline double log_gamma_of(double n) {
    // exact factorials for integer N keep (N-1)! bit-faithful for small N
    if (n == std::floor(n) && n <= 20.0) {
        double fact = 1.0;
        for (int k = 2; k < static_cast<int>(n); ++k) fact *= k;
        return std::log(fact);
    }
    return std::lgamma(n);
}
}  // namespace detail

/// E_hat(N, theta) = N (N theta)^(N-1) exp(-N theta) / Gamma(N), evaluated in
/// log space. N may be any real >= 1.
inline double tanks_model(double n, double theta) {
    if (!(n >= 1.0)) throw InvalidArgument("tanks-in-series model needs N >= 1");
    if (theta < 0.0) throw InvalidArgument("dimensionless time must be non-negative");
    if (theta == 0.0) return n == 1.0 ? 1.0 : 0.0;
    const double log_e = std::log(n) + (n - 1.0) * std::log(n * theta) - n * theta - detail::log_gamma_of(n);
    return std::exp(log_e);
}

inline std::vector<double> tanks_curve(double n, const std::vector<double>& theta) {
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = tanks_model(n, theta[i]);
    return out;
}

inline double tanks_mse(const RTDCurve& curve, double n) {
    double s = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double r = curve.e[i] - tanks_model(n, curve.theta[i]);
        s += r * r;
    }
    return s / static_cast<double>(curve.size());
}

inline void validate(const RTDCurve& curve) {
    if (curve.theta.size() != curve.e.size() || curve.theta.empty()) throw InvalidArgument("malformed RTD curve");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (!std::isfinite(curve.theta[i]) || !std::isfinite(curve.e[i])) throw InvalidArgument("non-finite RTD sample");
        if (curve.e[i] < 0.0) throw InvalidArgument("negative E in RTD curve");
        if (i > 0 && !(curve.theta[i] > curve.theta[i - 1])) throw InvalidArgument("theta must be strictly increasing");
    }
    if (curve.theta.front() < 0.0) throw InvalidArgument("theta must be non-negative");
}

/// N* = argmin_N mean (E_i - E_hat_i(N))^2 over N in [1, 600]: a 50-point
/// log-spaced scan picks the bracket, golden-section refines it. Ties go to
/// the smaller N. A flat residual (variation < 1e-12) is reported ill-posed.
inline TanksFit fit_tanks(const RTDCurve& curve) {
    validate(curve);
    constexpr int kGrid = 50;
    std::vector<double> grid(kGrid), value(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        grid[static_cast<std::size_t>(i)] =
            kMinTanks * std::pow(kMaxTanks / kMinTanks, static_cast<double>(i) / (kGrid - 1));
        value[static_cast<std::size_t>(i)] = tanks_mse(curve, grid[static_cast<std::size_t>(i)]);
    }
    grid.front() = kMinTanks;
    grid.back() = kMaxTanks;

    TanksFit fit;
    const auto [lo_it, hi_it] = std::minmax_element(value.begin(), value.end());
    if (*hi_it - *lo_it < 1e-12) {
        fit.n_star = kMinTanks;
        fit.mse = tanks_mse(curve, kMinTanks);
        fit.ill_posed = true;
        return fit;
    }
    const auto best = static_cast<std::size_t>(lo_it - value.begin());  // first minimum = smallest N
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[std::min<std::size_t>(best + 1, kGrid - 1)];
    const auto m = optim::golden_section([&](double n) { return tanks_mse(curve, n); }, a, b, 1e-7);
    if (m.value < value[best] || (m.value == value[best] && m.x < grid[best])) {
        fit.n_star = m.x;
        fit.mse = m.value;
    } else {
        fit.n_star = grid[best];
        fit.mse = value[best];
    }
    return fit;
}

inline TanksFit composite_objective(const RTDCurve& curve, double alpha = kDefaultAlpha) {
    TanksFit fit = fit_tanks(curve);
    fit.alpha = alpha;
    fit.f = alpha * fit.mse - fit.n_star;
    return fit;
}

}  // namespace coilopt::rtd
