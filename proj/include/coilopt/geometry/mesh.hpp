#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/geometry/path.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coilopt::geometry {

using Triangle = std::array<std::uint32_t, 3>;

enum class FaceGroup : std::uint8_t { wall, inlet_port, outlet_port, inlet_cap, outlet_cap };

/// A ring of vertices around the centerline. Vertices are contiguous:
/// [first, first + count).
struct Ring {
    Vec3 center;
    Vec3 tangent;
    std::uint32_t first = 0;
    std::uint32_t count = 0;
    double s = 0.0;  ///< arclength along the coil; negative inside the inlet port
};

/// Triangulated tube. While `capped` is false the first and last rings are
/// open ends (the port markers); add_ports extends and closes them.
struct ReactorSurface {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<FaceGroup> groups;       ///< one per triangle
    std::vector<double> triangle_s;      ///< arclength of each triangle, for diagnostics
    std::vector<Ring> rings;
    bool capped = false;

    std::size_t inlet_ring() const { return 0; }
    std::size_t outlet_ring() const { return rings.empty() ? 0 : rings.size() - 1; }

    void add_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, FaceGroup g, double s) {
        triangles.push_back({a, b, c});
        groups.push_back(g);
        triangle_s.push_back(s);
    }
};

struct EdgeDefect {
    std::uint32_t a = 0, b = 0;
    int count = 0;
};

struct GeometryReport {
    bool watertight = false;
    bool winding_consistent = false;
    bool outward = false;
    std::vector<EdgeDefect> boundary_edges;      ///< used by one triangle
    std::vector<EdgeDefect> nonmanifold_edges;   ///< used by three or more
    std::vector<std::pair<std::uint32_t, std::uint32_t>> intersecting_pairs;
    bool self_intersection_checked = false;
    double min_radius = std::numeric_limits<double>::quiet_NaN();
    double max_radius = std::numeric_limits<double>::quiet_NaN();
    double volume = 0.0;
    double area = 0.0;

    bool valid() const {
        return watertight && winding_consistent && outward && (!self_intersection_checked || intersecting_pairs.empty());
    }
};

inline double signed_volume(const ReactorSurface& s) {
    double v = 0.0;
    for (const auto& t : s.triangles) v += s.vertices[t[0]].dot(s.vertices[t[1]].cross(s.vertices[t[2]]));
    return v / 6.0;
}

inline double surface_area(const ReactorSurface& s) {
    double a = 0.0;
    for (const auto& t : s.triangles)
        a += (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]).norm();
    return 0.5 * a;
}

namespace detail {

// Segment pq against triangle abc (Moller-Trumbore); parallel segments miss.
inline bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    constexpr double eps = 1e-12;
    const Vec3 dir = q - p;
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < eps * e1.norm() * e2.norm() * dir.norm()) return false;
    const double inv = 1.0 / det;
    const Vec3 sv = p - a;
    const double u = inv * sv.dot(h);
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qv = sv.cross(e1);
    const double v = inv * dir.dot(qv);
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = inv * e2.dot(qv);
    return t >= 0.0 && t <= 1.0;
}

inline bool triangles_intersect(const std::array<Vec3, 3>& x, const std::array<Vec3, 3>& y) {
    for (int i = 0; i < 3; ++i) {
        if (segment_hits_triangle(x[i], x[(i + 1) % 3], y[0], y[1], y[2])) return true;
        if (segment_hits_triangle(y[i], y[(i + 1) % 3], x[0], x[1], x[2])) return true;
    }
    return false;
}

struct CellKey {
    std::int64_t i, j, k;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const {
        std::uint64_t h = static_cast<std::uint64_t>(c.i) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(c.j) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(c.k) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace detail

/// All pairs of triangles that share no vertex and intersect. Triangles are
/// bucketed into a uniform grid sized to the mean edge length; each pair is
/// tested once, in the lowest cell both bounding boxes cover.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> find_self_intersections(const ReactorSurface& s) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> hits;
    const std::size_t nt = s.triangles.size();
    if (nt < 2) return hits;
    double edge_sum = 0.0;
    for (const auto& t : s.triangles)
        for (int e = 0; e < 3; ++e) edge_sum += (s.vertices[t[(e + 1) % 3]] - s.vertices[t[e]]).norm();
    const double cell = std::max(edge_sum / (3.0 * static_cast<double>(nt)) * 2.0, 1e-9);

    std::vector<std::array<std::int64_t, 6>> ranges(nt);
    std::unordered_map<detail::CellKey, std::vector<std::uint32_t>, detail::CellHash> grid;
    for (std::size_t n = 0; n < nt; ++n) {
        Vec3 lo = s.vertices[s.triangles[n][0]], hi = lo;
        for (int e = 1; e < 3; ++e) {
            lo = lo.cwiseMin(s.vertices[s.triangles[n][e]]);
            hi = hi.cwiseMax(s.vertices[s.triangles[n][e]]);
        }
        auto& r = ranges[n];
        for (int d = 0; d < 3; ++d) {
            r[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::floor(lo[d] / cell));
            r[static_cast<std::size_t>(d + 3)] = static_cast<std::int64_t>(std::floor(hi[d] / cell));
        }
        for (auto i = r[0]; i <= r[3]; ++i)
            for (auto j = r[1]; j <= r[4]; ++j)
                for (auto k = r[2]; k <= r[5]; ++k) grid[{i, j, k}].push_back(static_cast<std::uint32_t>(n));
    }

    auto shares_vertex = [&](const Triangle& a, const Triangle& b) {
        for (auto u : a)
            for (auto v : b)
                if (u == v) return true;
        return false;
    };

    for (const auto& [key, bucket] : grid) {
        for (std::size_t x = 0; x < bucket.size(); ++x)
            for (std::size_t y = x + 1; y < bucket.size(); ++y) {
                const auto& ra = ranges[bucket[x]];
                const auto& rb = ranges[bucket[y]];
                // test only in the minimum shared cell
                if (key.i != std::max(ra[0], rb[0]) || key.j != std::max(ra[1], rb[1]) || key.k != std::max(ra[2], rb[2]))
                    continue;
                const auto& ta = s.triangles[bucket[x]];
                const auto& tb = s.triangles[bucket[y]];
                if (shares_vertex(ta, tb)) continue;
                const std::array<Vec3, 3> pa{s.vertices[ta[0]], s.vertices[ta[1]], s.vertices[ta[2]]};
                const std::array<Vec3, 3> pb{s.vertices[tb[0]], s.vertices[tb[1]], s.vertices[tb[2]]};
                if (detail::triangles_intersect(pa, pb)) hits.emplace_back(std::min(bucket[x], bucket[y]), std::max(bucket[x], bucket[y]));
            }
    }
    std::sort(hits.begin(), hits.end());
    return hits;
}

inline GeometryReport validate_geometry(const ReactorSurface& s, bool check_self_intersection = true) {
    GeometryReport r;
    // per undirected edge: use count and orientation sum (+1 for low->high)
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<int, int>> edges;
    for (const auto& t : s.triangles)
        for (int e = 0; e < 3; ++e) {
            const auto a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
            auto& slot = edges[{std::min(a, b), std::max(a, b)}];
            slot.first += 1;
            slot.second += a < b ? 1 : -1;
        }
    r.winding_consistent = true;
    for (const auto& [key, slot] : edges) {
        if (slot.first == 1) r.boundary_edges.push_back({key.first, key.second, 1});
        if (slot.first > 2) r.nonmanifold_edges.push_back({key.first, key.second, slot.first});
        if (slot.first == 2 && slot.second != 0) r.winding_consistent = false;
    }
    r.watertight = !s.triangles.empty() && r.boundary_edges.empty() && r.nonmanifold_edges.empty();
    r.volume = signed_volume(s);
    r.area = surface_area(s);
    r.outward = r.volume > 0.0;
    if (check_self_intersection) {
        r.intersecting_pairs = find_self_intersections(s);
        r.self_intersection_checked = true;
    }
    for (const auto& ring : s.rings)
        for (std::uint32_t v = ring.first; v < ring.first + ring.count; ++v) {
            const double d = (s.vertices[v] - ring.center).norm();
            if (!(d >= r.min_radius)) r.min_radius = std::isnan(r.min_radius) ? d : std::min(r.min_radius, d);
            if (!(d <= r.max_radius)) r.max_radius = std::isnan(r.max_radius) ? d : std::max(r.max_radius, d);
        }
    return r;
}

/// Throws GeometryInvalid for surfaces that are not closed, consistently
/// wound, outward facing and free of self-intersection.
inline void require_valid(const ReactorSurface& s, const GeometryReport& r) {
    if (!r.watertight)
        throw GeometryInvalid("surface is not watertight (" + std::to_string(r.boundary_edges.size()) + " boundary, " +
                                  std::to_string(r.nonmanifold_edges.size()) + " non-manifold edges)",
                              0.0, 0.0);
    if (!r.winding_consistent || !r.outward) throw GeometryInvalid("inconsistent or inward triangle winding", 0.0, 0.0);
    if (!r.intersecting_pairs.empty()) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [a, b] : r.intersecting_pairs)
            for (auto t : {a, b}) {
                lo = std::min(lo, s.triangle_s[t]);
                hi = std::max(hi, s.triangle_s[t]);
            }
        throw GeometryInvalid("surface self-intersects between arclength " + std::to_string(lo) + " and " +
                                  std::to_string(hi) + " mm",
                              lo, hi);
    }
}

}  // namespace coilopt::geometry
