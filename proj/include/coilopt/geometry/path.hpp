#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/geometry/coil.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace coilopt::geometry {

using Vec3 = Eigen::Vector3d;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson). Stays
/// within the range of neighbouring data, so bounded deviations stay bounded.
class Pchip {
public:
    Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)), d_(x_.size(), 0.0) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw InvalidArgument("PCHIP needs at least 2 matching knots");
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            h[k] = x_[k + 1] - x_[k];
            if (!(h[k] > 0.0)) throw InvalidArgument("PCHIP knots must increase");
            delta[k] = (y_[k + 1] - y_[k]) / h[k];
        }
        if (n == 2) {
            d_[0] = d_[1] = delta[0];
            return;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (delta[k - 1] * delta[k] <= 0.0) continue;
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
        d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
        k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
        const double h = x_[k + 1] - x_[k];
        const double t = (x - x_[k]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * d_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
               (t3 - t2) * h * d_[k + 1];
    }

private:
    static double end_slope(double h0, double h1, double del0, double del1) {
        double d = ((2 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (d * del0 <= 0.0) return 0.0;
        if (del0 * del1 < 0.0 && std::abs(d) > 3 * std::abs(del0)) return 3 * del0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

/// Sampled centerline with cumulative chord-length arclength.
struct Centerline {
    std::vector<Vec3> points;
    std::vector<double> arclength;

    double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
    std::size_t size() const { return points.size(); }

    void compute_arclength() {
        arclength.assign(points.size(), 0.0);
        for (std::size_t i = 1; i < points.size(); ++i) arclength[i] = arclength[i - 1] + (points[i] - points[i - 1]).norm();
    }
};

/// Baseline helix (rho_0 = C, z_0 = p phi / 2 pi over phi in [0, 2 pi turns])
/// plus deviations placed at n_p equally spaced path angles and interpolated
/// between stations. Sampled uniformly in phi.
inline Centerline build_path(const PathParams& params, const NominalCoil& nominal, int samples) {
    nominal.validate();
    params.validate(nominal);
    if (samples < 2) throw InvalidArgument("path needs at least 2 samples");
    const auto n_p = static_cast<std::size_t>(nominal.n_p);
    const double total = nominal.total_angle();
    std::vector<double> stations(n_p);
    for (std::size_t j = 0; j < n_p; ++j) stations[j] = total * static_cast<double>(j) / static_cast<double>(n_p - 1);
    const Pchip rho(stations, params.delta_rho);
    const Pchip dz(stations, params.delta_z);

    Centerline c;
    c.points.reserve(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double phi = total * k / (samples - 1);
        const double r = nominal.coil_radius + rho(phi);
        const double z = nominal.pitch * phi / (2.0 * std::numbers::pi) + dz(phi);
        c.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    c.compute_arclength();
    return c;
}

inline Centerline straight_path(double length, int samples) {
    if (!(length > 0.0) || samples < 2) throw InvalidArgument("straight path needs positive length and 2 samples");
    Centerline c;
    for (int k = 0; k < samples; ++k) c.points.emplace_back(0.0, 0.0, length * k / (samples - 1));
    c.compute_arclength();
    return c;
}

/// Orthonormal frame: tangent along the flow, normal and binormal spanning
/// the cross-section plane (binormal = tangent x normal).
struct Frame {
    Vec3 tangent;
    Vec3 normal;
    Vec3 binormal;
};

/// Rotation-minimizing frames by the double-reflection method (Wang, Juttler,
/// Zheng & Liu 2008). The first normal follows the curvature direction when
/// the curve bends at the start, otherwise an arbitrary perpendicular.
inline std::vector<Frame> transport_frames(const Centerline& line) {
    const std::size_t n = line.size();
    if (n < 2) throw DegenerateTangent("centerline needs at least 2 samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!((line.points[i] - line.points[i - 1]).norm() > 1e-12))
            throw DegenerateTangent("repeated centerline point at sample " + std::to_string(i));

    std::vector<Vec3> tangents(n);
    tangents[0] = (line.points[1] - line.points[0]).normalized();
    tangents[n - 1] = (line.points[n - 1] - line.points[n - 2]).normalized();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        // chord-weighted average of the neighbouring segment directions
        const Vec3 a = line.points[i] - line.points[i - 1];
        const Vec3 b = line.points[i + 1] - line.points[i];
        const double la = a.norm(), lb = b.norm();
        const Vec3 t = (a / la) * lb + (b / lb) * la;
        if (!(t.norm() > 1e-12)) throw DegenerateTangent("tangent reverses at sample " + std::to_string(i));
        tangents[i] = t.normalized();
    }

    Vec3 n0;
    if (n >= 3) {
        const Vec3 bend = tangents[1] - tangents[0];
        const Vec3 perp = bend - bend.dot(tangents[0]) * tangents[0];
        if (perp.norm() > 1e-9 * (line.points[1] - line.points[0]).norm()) n0 = perp.normalized();
    }
    if (n0.size() == 0 || !n0.allFinite() || n0.norm() < 0.5) {
        const Vec3& t = tangents[0];
        Vec3 axis = Vec3::UnitX();
        if (std::abs(t.x()) > std::abs(t.y())) axis = Vec3::UnitY();
        if (std::abs(t.z()) < std::min(std::abs(t.x()), std::abs(t.y()))) axis = Vec3::UnitZ();
        n0 = (axis - axis.dot(t) * t).normalized();
    }

    std::vector<Frame> frames(n);
    frames[0] = {tangents[0], n0, tangents[0].cross(n0)};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Vec3 v1 = line.points[i + 1] - line.points[i];
        const double c1 = v1.squaredNorm();
        const Vec3 r_l = frames[i].normal - (2.0 / c1) * v1.dot(frames[i].normal) * v1;
        const Vec3 t_l = tangents[i] - (2.0 / c1) * v1.dot(tangents[i]) * v1;
        const Vec3 v2 = tangents[i + 1] - t_l;
        const double c2 = v2.squaredNorm();
        Vec3 r_next = c2 > 0.0 ? Vec3(r_l - (2.0 / c2) * v2.dot(r_l) * v2) : r_l;
        // re-orthonormalize against accumulated rounding
        r_next = (r_next - r_next.dot(tangents[i + 1]) * tangents[i + 1]).normalized();
        frames[i + 1] = {tangents[i + 1], r_next, tangents[i + 1].cross(r_next)};
    }
    return frames;
}

/// Centerline with frames; supports interpolation at any arclength.
struct FramedPath {
    Centerline line;
    std::vector<Frame> frames;

    explicit FramedPath(Centerline c) : line(std::move(c)), frames(transport_frames(line)) {}

    struct Sample {
        Vec3 point;
        Frame frame;
    };

    Sample at(double s) const {
        const auto& a = line.arclength;
        s = std::clamp(s, 0.0, line.length());
        std::size_t k = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), s) - a.begin());
        k = std::clamp<std::size_t>(k, 1, a.size() - 1) - 1;
        const double t = (s - a[k]) / (a[k + 1] - a[k]);
        if (t <= 0.0) return {line.points[k], frames[k]};
        if (t >= 1.0) return {line.points[k + 1], frames[k + 1]};
        const Vec3 p = (1.0 - t) * line.points[k] + t * line.points[k + 1];
        const Vec3 tan = ((1.0 - t) * frames[k].tangent + t * frames[k + 1].tangent).normalized();
        Vec3 nrm = (1.0 - t) * frames[k].normal + t * frames[k + 1].normal;
        nrm = (nrm - nrm.dot(tan) * tan).normalized();
        return {p, {tan, nrm, tan.cross(nrm)}};
    }
};

/// Curvature estimate at each sample from the turning angle of adjacent
/// chords over the local arclength (zero at the ends' one-sided samples are
/// replaced by their neighbours).
inline std::vector<double> discrete_curvature(const Centerline& line) {
    const std::size_t n = line.size();
    std::vector<double> k(n, 0.0);
    if (n < 3) return k;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vec3 a = line.points[i] - line.points[i - 1];
        const Vec3 b = line.points[i + 1] - line.points[i];
        const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
        k[i] = 2.0 * std::sin(0.5 * angle) / (0.5 * (a.norm() + b.norm())) / std::cos(0.5 * angle);
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    return k;
}

}  // namespace coilopt::geometry
