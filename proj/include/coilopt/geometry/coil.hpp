#pragma once

#include "coilopt/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace coilopt::geometry {

/// Baseline coil shared by both parameterisations. Lengths in mm.
struct NominalCoil {
    double pitch = 10.4;
    double coil_radius = 12.5;
    int turns = 2;
    double tube_radius = 3.0;  ///< constant radius of the end cross-sections
    int n_c = 6;               ///< inducing points per cross-section
    int n_l = 6;               ///< interpolated cross-sections along the coil
    int n_p = 6;               ///< inducing points along the path
    double radius_lo = 2.0;
    double radius_hi = 4.0;
    double delta_rho_max = 3.5;
    double delta_z_max = 1.0;

    double total_angle() const { return 2.0 * std::numbers::pi * turns; }
    /// Circumferential length 2 pi C turns (pitch neglected).
    double nominal_length() const { return total_angle() * coil_radius; }

    void validate() const {
        if (!(pitch > 0.0)) throw InvalidArgument("pitch must be positive");
        if (turns < 1) throw InvalidArgument("coil needs at least one turn");
        if (!(coil_radius > radius_hi)) throw InvalidArgument("coil radius must exceed the tube radius upper bound");
        if (n_c < 3 || n_l < 1 || n_p < 2) throw InvalidArgument("need n_c >= 3, n_l >= 1, n_p >= 2");
        if (!(radius_lo > 0.0 && radius_lo < radius_hi)) throw InvalidArgument("bad cross-section radius bounds");
        if (!(tube_radius >= radius_lo && tube_radius <= radius_hi)) throw InvalidArgument("end radius outside bounds");
        if (!(coil_radius - delta_rho_max > radius_hi)) throw InvalidArgument("radial deviation bound too large");
    }

    bool operator==(const NominalCoil&) const = default;
};

/// Inducing radii: n_l rows (stations along the coil) by n_c columns
/// (angles 2 pi i / n_c).
struct CrossSectionParams {
    Eigen::MatrixXd radii;

    static CrossSectionParams constant(const NominalCoil& coil, double r) {
        return {Eigen::MatrixXd::Constant(coil.n_l, coil.n_c, r)};
    }

    void validate(const NominalCoil& coil) const {
        if (radii.rows() != coil.n_l || radii.cols() != coil.n_c)
            throw InvalidArgument("cross-section radii must be " + std::to_string(coil.n_l) + " x " + std::to_string(coil.n_c));
        for (Eigen::Index j = 0; j < radii.rows(); ++j)
            for (Eigen::Index i = 0; i < radii.cols(); ++i) {
                const double r = radii(j, i);
                if (!(r >= coil.radius_lo && r <= coil.radius_hi))
                    throw InvalidArgument("radius[" + std::to_string(j * radii.cols() + i) + "] = " + std::to_string(r) +
                                          " outside [" + std::to_string(coil.radius_lo) + ", " +
                                          std::to_string(coil.radius_hi) + "]");
            }
    }
};

/// Deviations from the baseline helix at n_p equally spaced path angles.
/// There is no deviation in the rotational coordinate.
struct PathParams {
    std::vector<double> delta_rho;
    std::vector<double> delta_z;

    static PathParams zero(const NominalCoil& coil) {
        return {std::vector<double>(static_cast<std::size_t>(coil.n_p), 0.0),
                std::vector<double>(static_cast<std::size_t>(coil.n_p), 0.0)};
    }

    void validate(const NominalCoil& coil) const {
        const auto n = static_cast<std::size_t>(coil.n_p);
        if (delta_rho.size() != n || delta_z.size() != n)
            throw InvalidArgument("path deviations need " + std::to_string(n) + " entries each");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(std::abs(delta_rho[j]) <= coil.delta_rho_max))
                throw InvalidArgument("delta_rho[" + std::to_string(j) + "] = " + std::to_string(delta_rho[j]) + " out of bounds");
            if (!(std::abs(delta_z[j]) <= coil.delta_z_max))
                throw InvalidArgument("delta_z[" + std::to_string(j) + "] = " + std::to_string(delta_z[j]) + " out of bounds");
        }
    }

    bool operator==(const PathParams&) const = default;
};

/// A concrete reactor: path deviations plus (optionally) variable
/// cross-sections. Without cross-sections the tube is a circle of
/// NominalCoil::tube_radius everywhere.
struct ReactorDesign {
    PathParams path;
    std::optional<CrossSectionParams> cross_sections;
};

/// Surface resolution. Ring count along the coil is rings_per_turn * turns
/// (+1), plus one extra ring at each interior cross-section station.
struct Tessellation {
    int rings_per_turn = 64;
    int ring_vertices = 48;
    int path_samples_per_turn = 1024;
    double inlet_length = 10.0;
    double outlet_length = 10.0;
    bool check_self_intersection = true;
};

}  // namespace coilopt::geometry
