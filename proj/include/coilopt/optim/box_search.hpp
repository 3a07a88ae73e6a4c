#pragma once

// Small bounded optimizers shared by the GP fitter, the acquisition search
// and the tanks-in-series fit. All routines minimize.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace coilopt::optim {

using Vector = Eigen::VectorXd;

struct Minimum {
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

inline Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

struct SpgOptions {
    int max_iterations = 200;
    double projected_gradient_tol = 1e-6;
    double relative_decrease_tol = 1e-10;
    int memory = 5;
};

/// Spectral projected gradient with a non-monotone Armijo line search
/// (Birgin, Martinez & Raydan). `fg` returns f(x) and writes the gradient.
/// Non-finite values are treated as +inf so the line search backs off them.
/// The returned point is the best one evaluated, never worse than `x0`.
inline Minimum minimize_spg(const std::function<double(const Vector&, Vector&)>& fg, const Vector& x0,
                            const Vector& lo, const Vector& hi, const SpgOptions& opts = {}) {
    constexpr double kLambdaMin = 1e-10;
    constexpr double kLambdaMax = 1e10;
    constexpr double kGamma = 1e-4;

    Minimum best;
    Vector x = project(x0, lo, hi);
    Vector g(x.size());
    double f = fg(x, g);
    best.evaluations = 1;
    if (!std::isfinite(f) || !g.allFinite()) {
        best.x = x;
        return best;
    }
    best.x = x;
    best.value = f;

    std::deque<double> history{f};
    double lambda = 1.0;
    {
        const double pg = (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
        if (pg > 0.0) lambda = std::clamp(1.0 / pg, kLambdaMin, kLambdaMax);
    }

    Vector g_new(x.size());
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Vector d = project(x - lambda * g, lo, hi) - x;
        if (d.lpNorm<Eigen::Infinity>() < opts.projected_gradient_tol) break;
        const double f_ref = *std::max_element(history.begin(), history.end());
        const double slope = g.dot(d);

        double alpha = 1.0;
        double f_new = 0.0;
        Vector x_new;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = x + alpha * d;
            f_new = fg(x_new, g_new);
            ++best.evaluations;
            if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f_ref + kGamma * alpha * slope) {
                accepted = true;
                break;
            }
            if (std::isfinite(f_new)) {
                // safeguarded quadratic backtrack
                const double denom = 2.0 * (f_new - f - alpha * slope);
                double trial = denom > 0.0 ? -slope * alpha * alpha / denom : 0.5 * alpha;
                alpha = std::clamp(trial, 0.1 * alpha, 0.5 * alpha);
            } else {
                alpha *= 0.25;
            }
        }
        if (!accepted) break;

        const Vector s = x_new - x;
        const Vector y = g_new - g;
        const double sty = s.dot(y);
        lambda = sty <= 0.0 ? kLambdaMax : std::clamp(s.squaredNorm() / sty, kLambdaMin, kLambdaMax);

        const double decrease = f - f_new;
        x = x_new;
        g = g_new;
        f = f_new;
        if (f < best.value) {
            best.value = f;
            best.x = x;
        }
        history.push_back(f);
        if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
        if (std::abs(decrease) <= opts.relative_decrease_tol * std::max(1.0, std::abs(f)) &&
            decrease >= 0.0 && s.lpNorm<Eigen::Infinity>() < 1e-8)
            break;
    }
    return best;
}

struct CoordinateSearchOptions {
    double initial_step = 0.25;  ///< fraction of each box side
    double min_step = 1e-4;
    int max_evaluations = 2000;
};

/// Derivative-free compass search inside a box. Each sweep tries +/- step on
/// every coordinate in turn, keeps improvements, and halves the step after a
/// sweep without progress.
inline Minimum minimize_coordinate(const std::function<double(const Vector&)>& f, const Vector& x0,
                                   const Vector& lo, const Vector& hi, const CoordinateSearchOptions& opts = {}) {
    Minimum best;
    best.x = project(x0, lo, hi);
    best.value = f(best.x);
    best.evaluations = 1;
    if (!std::isfinite(best.value)) best.value = std::numeric_limits<double>::infinity();

    const Vector width = hi - lo;
    double step = opts.initial_step;
    while (step >= opts.min_step && best.evaluations < opts.max_evaluations) {
        bool improved = false;
        for (Eigen::Index i = 0; i < best.x.size() && best.evaluations < opts.max_evaluations; ++i) {
            for (double sign : {1.0, -1.0}) {
                Vector trial = best.x;
                trial[i] = std::clamp(trial[i] + sign * step * width[i], lo[i], hi[i]);
                if (trial[i] == best.x[i]) continue;
                const double v = f(trial);
                ++best.evaluations;
                if (std::isfinite(v) && v < best.value) {
                    best.value = v;
                    best.x = std::move(trial);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

struct ScalarMinimum {
    double x = 0.0;
    double value = std::numeric_limits<double>::infinity();
};

/// Golden-section search on [a, b] until the bracket is narrower than `tol`.
/// Returns the best point evaluated, including both ends.
inline ScalarMinimum golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    ScalarMinimum best{a, f(a)};
    auto consider = [&](double x, double v) {
        if (v < best.value || (v == best.value && x < best.x)) best = {x, v};
    };
    consider(b, f(b));

    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    consider(c, fc);
    consider(d, fd);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            consider(d, fd);
        }
    }
    return best;
}

}  // namespace coilopt::optim
