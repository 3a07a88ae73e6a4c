#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/gp/gaussian_process.hpp"

#include <Eigen/Core>

#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace coilopt::geometry {

inline constexpr double kMinCrossSectionRadius = 0.1;  // mm
inline constexpr double kCrossSectionTau = 4.0;

/// Closed polar curve sampled at angles 2 pi m / size(); the sample at 2 pi
/// is the sample at 0, so it is stored once.
struct PolarCurve {
    std::vector<double> radii;

    std::size_t size() const { return radii.size(); }
    double angle(std::size_t m) const { return 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(radii.size()); }

    double area() const {
        const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(radii.size());
        double a = 0.0;
        for (std::size_t m = 0; m < radii.size(); ++m) a += radii[m] * radii[(m + 1) % radii.size()];
        return 0.5 * std::sin(dtheta) * a;
    }

    double perimeter() const {
        const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(radii.size());
        double p = 0.0;
        for (std::size_t m = 0; m < radii.size(); ++m) {
            const double r0 = radii[m], r1 = radii[(m + 1) % radii.size()];
            p += std::sqrt(r0 * r0 + r1 * r1 - 2.0 * r0 * r1 * std::cos(dtheta));
        }
        return p;
    }
};

/// Inducing angles 2 pi i / n_c for a row of n_c radii.
inline Eigen::MatrixXd inducing_angles(std::size_t n_c) {
    Eigen::MatrixXd a(1, static_cast<Eigen::Index>(n_c));
    for (std::size_t i = 0; i < n_c; ++i) a(0, static_cast<Eigen::Index>(i)) = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_c);
    return a;
}

/// Noiseless polar-kernel GP through (2 pi i / n_c, r_i), prior mean equal to
/// the mean radius, evaluated at `resolution` equally spaced angles.
inline PolarCurve interpolate_cross_section(std::span<const double> radii_row, int resolution, double tau = kCrossSectionTau) {
    if (resolution < 16) throw InvalidArgument("cross-section resolution must be at least 16");
    if (radii_row.size() < 3) throw InvalidArgument("a cross-section needs at least 3 inducing radii");
    gp::GPModel model;
    model.kernel = gp::KernelSpec::polar(tau);
    model.train_inputs = inducing_angles(radii_row.size());
    model.train_targets = Eigen::Map<const Eigen::VectorXd>(radii_row.data(), static_cast<Eigen::Index>(radii_row.size()));
    model.noise_variance = 0.0;
    model.prior_mean = model.train_targets.mean();
    const gp::GaussianProcess gp(std::move(model));

    PolarCurve curve;
    curve.radii.resize(static_cast<std::size_t>(resolution));
    Eigen::VectorXd q(1);
    for (int m = 0; m < resolution; ++m) {
        q[0] = 2.0 * std::numbers::pi * m / resolution;
        const double r = gp.predict_mean(q);
        if (!(r > kMinCrossSectionRadius))
            throw DegenerateCrossSection("interpolated radius " + std::to_string(r) + " mm at angle " + std::to_string(q[0]));
        curve.radii[static_cast<std::size_t>(m)] = r;
    }
    return curve;
}

}  // namespace coilopt::geometry
