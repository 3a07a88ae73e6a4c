#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/geometry/coil.hpp"
#include "coilopt/geometry/cross_section.hpp"
#include "coilopt/geometry/mesh.hpp"
#include "coilopt/geometry/path.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace coilopt::geometry {

/// Radius as a function of (arclength, ring angle index). Stations sit at
/// 0, L/(n_l+1), ..., L; the two ends are circles of the end radius. Between
/// stations k and k+1 the radius blends the Lagrange quadratics through
/// (k-1, k, k+1) and (k, k+1, k+2) linearly, so it passes through every
/// station and has a continuous slope.
class RadiusField {
public:
    RadiusField(std::vector<double> stations, std::vector<std::vector<double>> radii)
        : s_(std::move(stations)), r_(std::move(radii)) {
        if (s_.size() < 2 || s_.size() != r_.size()) throw InvalidArgument("radius field needs matching stations");
        for (std::size_t k = 1; k < s_.size(); ++k)
            if (!(s_[k] > s_[k - 1])) throw InvalidArgument("stations must increase");
        for (const auto& row : r_)
            if (row.size() != r_.front().size()) throw InvalidArgument("stations need equal ring resolution");
    }

    static RadiusField build(const NominalCoil& coil, const std::optional<CrossSectionParams>& cs, double length, int ring_vertices) {
        const int n_l = cs ? static_cast<int>(cs->radii.rows()) : 0;
        std::vector<double> stations;
        std::vector<std::vector<double>> radii;
        const std::vector<double> end(static_cast<std::size_t>(ring_vertices), coil.tube_radius);
        stations.push_back(0.0);
        radii.push_back(end);
        for (int k = 1; k <= n_l; ++k) {
            stations.push_back(length * k / (n_l + 1));
            const Eigen::VectorXd row = cs->radii.row(k - 1).transpose();
            radii.push_back(interpolate_cross_section(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), ring_vertices).radii);
        }
        stations.push_back(length);
        radii.push_back(end);
        return RadiusField(std::move(stations), std::move(radii));
    }

    const std::vector<double>& stations() const { return s_; }
    const std::vector<double>& station_radii(std::size_t k) const { return r_[k]; }
    std::size_t ring_vertices() const { return r_.front().size(); }

    double operator()(double s, std::size_t m) const {
        const std::size_t n = s_.size();
        if (s <= s_.front()) return r_.front()[m];
        if (s >= s_.back()) return r_.back()[m];
        std::size_t k = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin()) - 1;
        const double t = (s - s_[k]) / (s_[k + 1] - s_[k]);
        if (t == 0.0) return r_[k][m];
        if (n == 2) return (1.0 - t) * r_[0][m] + t * r_[1][m];
        const bool has_left = k >= 1, has_right = k + 2 < n;
        if (!has_left) return quadratic(k, s, m);
        if (!has_right) return quadratic(k - 1, s, m);
        return (1.0 - t) * quadratic(k - 1, s, m) + t * quadratic(k, s, m);
    }

private:
    // Lagrange quadratic through stations j, j+1, j+2
    double quadratic(std::size_t j, double s, std::size_t m) const {
        const double a = s_[j], b = s_[j + 1], c = s_[j + 2];
        return r_[j][m] * (s - b) * (s - c) / ((a - b) * (a - c)) + r_[j + 1][m] * (s - a) * (s - c) / ((b - a) * (b - c)) +
               r_[j + 2][m] * (s - a) * (s - b) / ((c - a) * (c - b));
    }

    std::vector<double> s_;
    std::vector<std::vector<double>> r_;
};

namespace detail {

inline std::uint32_t push_ring(ReactorSurface& surf, const Vec3& center, const Frame& f, double s,
                               const std::vector<double>& radii) {
    const auto m = radii.size();
    const auto first = static_cast<std::uint32_t>(surf.vertices.size());
    for (std::size_t j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
        surf.vertices.push_back(center + radii[j] * (std::cos(th) * f.normal + std::sin(th) * f.binormal));
    }
    surf.rings.push_back({center, f.tangent, first, static_cast<std::uint32_t>(m), s});
    return first;
}

// quads between consecutive rings, split so normals face outward
inline void stitch(ReactorSurface& surf, const Ring& a, const Ring& b, FaceGroup g) {
    const std::uint32_t m = a.count;
    const double s = 0.5 * (a.s + b.s);
    for (std::uint32_t j = 0; j < m; ++j) {
        const std::uint32_t j1 = (j + 1) % m;
        surf.add_triangle(a.first + j, a.first + j1, b.first + j, g, s);
        surf.add_triangle(a.first + j1, b.first + j1, b.first + j, g, s);
    }
}

// uniform grid merged with the station positions; grid points closer than
// 1% of the spacing to a station are replaced by it
inline std::vector<double> ring_positions(double length, int segments, const std::vector<double>& stations) {
    std::vector<double> s;
    const double h = length / segments;
    for (int i = 0; i <= segments; ++i) s.push_back(length * i / segments);
    for (double st : stations) {
        auto it = std::lower_bound(s.begin(), s.end(), st);
        if (it != s.end() && std::abs(*it - st) < 0.01 * h) {
            *it = st;
            continue;
        }
        if (it != s.begin() && std::abs(*(it - 1) - st) < 0.01 * h) {
            *(it - 1) = st;
            continue;
        }
        s.insert(it, st);
    }
    return s;
}

}  // namespace detail

/// Open tube swept along the framed path; the first and last rings are the
/// port markers for add_ports.
inline ReactorSurface loft_surface(const RadiusField& field, const FramedPath& path, int axial_sections) {
    if (axial_sections < 1) throw InvalidArgument("need at least one axial section");
    const double length = path.line.length();
    if (std::abs(field.stations().back() - length) > 1e-9 * length)
        throw InvalidArgument("radius field stations do not span the path");
    const auto positions = detail::ring_positions(length, axial_sections, field.stations());
    const std::size_t m = field.ring_vertices();

    ReactorSurface surf;
    surf.vertices.reserve(positions.size() * m + 2);
    std::vector<double> radii(m);
    for (double s : positions) {
        for (std::size_t j = 0; j < m; ++j) {
            radii[j] = field(s, j);
            if (!(radii[j] > kMinCrossSectionRadius))
                throw DegenerateCrossSection("interpolated tube radius " + std::to_string(radii[j]) + " mm at s = " + std::to_string(s));
        }
        const auto smp = path.at(s);
        detail::push_ring(surf, smp.point, smp.frame, s, radii);
    }
    for (std::size_t i = 0; i + 1 < surf.rings.size(); ++i)
        detail::stitch(surf, surf.rings[i], surf.rings[i + 1], FaceGroup::wall);
    return surf;
}

/// Extends the open end rings straight along the end tangents and closes
/// them with fan-triangulated disks. Port segments are about as long as the
/// ring edge spacing.
inline ReactorSurface add_ports(const ReactorSurface& tube, double inlet_length, double outlet_length) {
    if (tube.capped) throw InvalidArgument("surface already has ports");
    if (tube.rings.size() < 2) throw InvalidArgument("surface has no port markers");
    if (!(inlet_length >= 0.0) || !(outlet_length >= 0.0)) throw InvalidArgument("port lengths must be non-negative");

    auto ring_radii = [&](const Ring& r) {
        std::vector<double> out(r.count);
        for (std::uint32_t j = 0; j < r.count; ++j) out[j] = (tube.vertices[r.first + j] - r.center).norm();
        const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
        if (*hi - *lo > 1e-6 * *hi) throw InvalidArgument("port rings must be circular");
        return *hi;
    };
    const Ring& in = tube.rings.front();
    const Ring& out = tube.rings.back();
    const double r_in = ring_radii(in), r_out = ring_radii(out);

    auto segments = [](double len, double r, std::uint32_t m) {
        if (len <= 0.0) return 0;
        const double spacing = 2.0 * std::numbers::pi * r / m;
        return std::max(1, static_cast<int>(std::ceil(len / spacing)));
    };
    const int n_in = segments(inlet_length, r_in, in.count);
    const int n_out = segments(outlet_length, r_out, out.count);

    ReactorSurface surf;
    surf.capped = true;
    auto copy_ring = [&](const Ring& src, const Vec3& shift, double s) {
        const auto first = static_cast<std::uint32_t>(surf.vertices.size());
        for (std::uint32_t j = 0; j < src.count; ++j) surf.vertices.push_back(tube.vertices[src.first + j] + shift);
        surf.rings.push_back({src.center + shift, src.tangent, first, src.count, s});
    };

    for (int k = n_in; k >= 1; --k) {
        const double d = inlet_length * k / n_in;
        copy_ring(in, -d * in.tangent, in.s - d);
    }
    const std::size_t first_wall_ring = surf.rings.size();
    for (const auto& r : tube.rings) copy_ring(r, Vec3::Zero(), r.s);
    const std::size_t last_wall_ring = surf.rings.size() - 1;
    for (int k = 1; k <= n_out; ++k) {
        const double d = outlet_length * k / n_out;
        copy_ring(out, d * out.tangent, out.s + d);
    }

    for (std::size_t i = 0; i + 1 < surf.rings.size(); ++i) {
        FaceGroup g = FaceGroup::wall;
        if (i < first_wall_ring) g = FaceGroup::inlet_port;
        if (i >= last_wall_ring) g = FaceGroup::outlet_port;
        detail::stitch(surf, surf.rings[i], surf.rings[i + 1], g);
    }

    const Ring& a = surf.rings.front();
    const auto ca = static_cast<std::uint32_t>(surf.vertices.size());
    surf.vertices.push_back(a.center);
    for (std::uint32_t j = 0; j < a.count; ++j) surf.add_triangle(ca, a.first + (j + 1) % a.count, a.first + j, FaceGroup::inlet_cap, a.s);
    const Ring& b = surf.rings.back();
    const auto cb = static_cast<std::uint32_t>(surf.vertices.size());
    surf.vertices.push_back(b.center);
    for (std::uint32_t j = 0; j < b.count; ++j) surf.add_triangle(cb, b.first + j, b.first + (j + 1) % b.count, FaceGroup::outlet_cap, b.s);
    return surf;
}

inline int path_samples(const NominalCoil& coil, const Tessellation& tess) {
    return tess.path_samples_per_turn * coil.turns + 1;
}

inline FramedPath framed_path(const ReactorDesign& design, const NominalCoil& coil, const Tessellation& tess) {
    return FramedPath(build_path(design.path, coil, path_samples(coil, tess)));
}

/// Triangle count of build_reactor for a circular tube (no cross-section
/// stations): ring_vertices * 2 per ring gap plus one fan per cap, with
/// ports split into ceil(length / edge spacing) segments.
inline std::size_t circular_triangle_count(const NominalCoil& coil, const Tessellation& tess) {
    const double spacing = 2.0 * std::numbers::pi * coil.tube_radius / tess.ring_vertices;
    auto port = [&](double len) { return len <= 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(len / spacing))); };
    const auto rings = static_cast<std::size_t>(tess.rings_per_turn * coil.turns + 1 + port(tess.inlet_length) + port(tess.outlet_length));
    const auto m = static_cast<std::size_t>(tess.ring_vertices);
    return 2 * m * (rings - 1) + 2 * m;
}

/// Full pipeline: path, frames, radius field, loft, ports, validation.
/// Throws GeometryInvalid when the result fails validation.
inline ReactorSurface build_reactor(const ReactorDesign& design, const NominalCoil& coil, const Tessellation& tess = {}) {
    coil.validate();
    if (design.cross_sections) design.cross_sections->validate(coil);
    if (tess.rings_per_turn < 4 || tess.ring_vertices < 16 || tess.path_samples_per_turn < 16)
        throw InvalidArgument("tessellation too coarse");
    const FramedPath path = framed_path(design, coil, tess);
    const auto field = RadiusField::build(coil, design.cross_sections, path.line.length(), tess.ring_vertices);
    const auto tube = loft_surface(field, path, tess.rings_per_turn * coil.turns);
    auto surf = add_ports(tube, tess.inlet_length, tess.outlet_length);
    require_valid(surf, validate_geometry(surf, tess.check_self_intersection));
    return surf;
}

}  // namespace coilopt::geometry
