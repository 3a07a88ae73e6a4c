#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/geometry/coil.hpp"
#include "coilopt/geometry/loft.hpp"
#include "coilopt/geometry/path.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace coilopt::flow {

/// Fidelities are continuous while modelling and rounded when evaluated.
struct FidelityVector {
    double axial = 1.0;
    double radial = 1.0;

    FidelityVector rounded() const { return {std::round(axial), std::round(radial)}; }
    bool operator==(const FidelityVector&) const = default;
};

struct FidelityBox {
    FidelityVector lo{1.0, 1.0};
    FidelityVector hi{4.0, 4.0};

    bool contains(const FidelityVector& z) const {
        return z.axial >= lo.axial && z.axial <= hi.axial && z.radial >= lo.radial && z.radial <= hi.radial;
    }
    /// Mean of the normalized coordinates; 1 at the top corner.
    double mean_normalized(const FidelityVector& z) const {
        return 0.5 * ((z.axial - lo.axial) / (hi.axial - lo.axial) + (z.radial - lo.radial) / (hi.radial - lo.radial));
    }
    bool operator==(const FidelityBox&) const = default;
};

/// Constants of the reduced-order model. Lengths in mm, time in s.
struct SurrogateConstants {
    double reynolds = 50.0;
    double kinematic_viscosity = 1.0;     ///< water, mm^2/s
    double molecular_diffusivity = 0.198; ///< tuned so a straight nominal tube has Pe ~ 20
    double g_min = 0.2;
    double dean_rate = 0.05;
    double pinch_rate = 1.0;
    double axial_fraction = 0.5;          ///< share of dispersion carried by in-channel diffusion
    int base_cells_per_turn = 50;
    double noise_fraction = 0.02;         ///< noise sd at the lowest fidelity, relative to peak
    double termination_fraction = 0.01;
    double output_intervals = 100.0;      ///< output samples per mean residence time
    double cost_per_update = 1.1e-6;      ///< simulated seconds per cell * channel^2 * step
    double model_cost_scale = 1.0 / 640.0;///< analytic cost model c0
    int ring_samples = 48;

    bool operator==(const SurrogateConstants&) const = default;
};

/// Per axial cell, all arrays of length n_cells.
struct GeometryFeatures {
    double length = 0.0;  ///< centerline length, mm
    std::vector<double> area;
    std::vector<double> hydraulic_radius;
    std::vector<double> curvature;
    std::vector<double> pinch;
    std::vector<double> dean;

    std::size_t size() const { return area.size(); }
    double cell_length() const { return length / static_cast<double>(area.size()); }
};

inline double reference_diameter(const geometry::NominalCoil& coil) { return 2.0 * coil.tube_radius; }

/// Volumetric flow for the operating Reynolds number in the end tubes.
inline double flow_rate(const geometry::NominalCoil& coil, const SurrogateConstants& k) {
    const double d = reference_diameter(coil);
    const double u = k.reynolds * k.kinematic_viscosity / d;
    return u * std::numbers::pi * 0.25 * d * d;
}

inline void validate(const GeometryFeatures& f) {
    const std::size_t n = f.area.size();
    if (n == 0 || f.hydraulic_radius.size() != n || f.curvature.size() != n || f.pinch.size() != n || f.dean.size() != n)
        throw InvalidArgument("feature arrays must be non-empty and of equal length");
    if (!(f.length > 0.0)) throw InvalidArgument("feature length must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(f.area[i] > 0.0) || !(f.hydraulic_radius[i] > 0.0)) throw InvalidArgument("cell " + std::to_string(i) + " has no area");
        if (!(f.pinch[i] > 0.0 && f.pinch[i] <= 1.0)) throw InvalidArgument("pinch index outside (0, 1]");
        if (!(f.curvature[i] >= 0.0) || !(f.dean[i] >= 0.0)) throw InvalidArgument("negative curvature or Dean proxy");
    }
}

namespace detail {
inline double interp_clamped(const std::vector<double>& x, const std::vector<double>& y, double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), q) - x.begin());
    const double t = (q - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}
}  // namespace detail

/// Samples a radius field on a framed path at n_cells cell centres.
inline GeometryFeatures extract_features(const geometry::FramedPath& path, const geometry::RadiusField& field, int n_cells,
                                         const SurrogateConstants& k = {}) {
    if (n_cells < 2) throw InvalidArgument("need at least 2 cells");
    GeometryFeatures f;
    f.length = path.line.length();
    const auto kappa = geometry::discrete_curvature(path.line);
    const std::size_t m = field.ring_vertices();
    geometry::PolarCurve ring;
    ring.radii.resize(m);
    for (int i = 0; i < n_cells; ++i) {
        const double s = f.length * (i + 0.5) / n_cells;
        for (std::size_t j = 0; j < m; ++j) ring.radii[j] = field(s, j);
        const auto [lo, hi] = std::minmax_element(ring.radii.begin(), ring.radii.end());
        if (!(*lo > geometry::kMinCrossSectionRadius)) throw DegenerateCrossSection("tube radius collapses at s = " + std::to_string(s));
        const double area = ring.area();
        const double rh = 2.0 * area / ring.perimeter();
        const double curv = detail::interp_clamped(path.line.arclength, kappa, s);
        f.area.push_back(area);
        f.hydraulic_radius.push_back(rh);
        f.curvature.push_back(curv);
        f.pinch.push_back(*lo / *hi);
        f.dean.push_back(k.reynolds * std::sqrt(rh * curv));
    }
    return f;
}

}  // namespace coilopt::flow
