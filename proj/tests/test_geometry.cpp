#include "coilopt/geometry/coil.hpp"
#include "coilopt/geometry/cross_section.hpp"
#include "coilopt/geometry/loft.hpp"
#include "coilopt/geometry/mesh.hpp"
#include "coilopt/geometry/path.hpp"
#include "coilopt/geometry/stl.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

using namespace coilopt;
using namespace coilopt::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

ReactorSurface uv_sphere(double r, int stacks, int slices) {
    ReactorSurface s;
    s.vertices.emplace_back(0, 0, r);
    for (int i = 1; i < stacks; ++i) {
        const double th = kPi * i / stacks;
        for (int j = 0; j < slices; ++j) {
            const double ph = 2 * kPi * j / slices;
            s.vertices.emplace_back(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th));
        }
    }
    s.vertices.emplace_back(0, 0, -r);
    const auto south = static_cast<std::uint32_t>(s.vertices.size() - 1);
    auto idx = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * slices + (j % slices)); };
    for (int j = 0; j < slices; ++j) s.add_triangle(0, idx(1, j), idx(1, j + 1), FaceGroup::wall, 0);
    for (int i = 1; i + 1 < stacks; ++i)
        for (int j = 0; j < slices; ++j) {
            s.add_triangle(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), FaceGroup::wall, 0);
            s.add_triangle(idx(i, j), idx(i + 1, j + 1), idx(i, j + 1), FaceGroup::wall, 0);
        }
    for (int j = 0; j < slices; ++j) s.add_triangle(south, idx(stacks - 1, j + 1), idx(stacks - 1, j), FaceGroup::wall, 0);
    s.capped = true;
    return s;
}

ReactorSurface straight_tube(const Vec3& origin, const Vec3& dir, double length, double r) {
    Centerline c;
    for (int k = 0; k <= 20; ++k) c.points.push_back(origin + dir.normalized() * (length * k / 20));
    c.compute_arclength();
    const FramedPath path(c);
    const RadiusField field({0.0, length}, {std::vector<double>(24, r), std::vector<double>(24, r)});
    return add_ports(loft_surface(field, path, 10), 0.0, 0.0);
}

ReactorSurface merge(const ReactorSurface& a, const ReactorSurface& b) {
    ReactorSurface m = a;
    const auto off = static_cast<std::uint32_t>(a.vertices.size());
    m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (std::size_t t = 0; t < b.triangles.size(); ++t)
        m.add_triangle(b.triangles[t][0] + off, b.triangles[t][1] + off, b.triangles[t][2] + off, b.groups[t], b.triangle_s[t]);
    return m;
}

CrossSectionParams random_cross_sections(const NominalCoil& coil, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(coil.radius_lo, coil.radius_hi);
    CrossSectionParams p{Eigen::MatrixXd(coil.n_l, coil.n_c)};
    for (int j = 0; j < coil.n_l; ++j)
        for (int i = 0; i < coil.n_c; ++i) p.radii(j, i) = u(rng);
    return p;
}

PathParams random_path(const NominalCoil& coil, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ur(-coil.delta_rho_max, coil.delta_rho_max);
    std::uniform_real_distribution<double> uz(-coil.delta_z_max, coil.delta_z_max);
    PathParams p = PathParams::zero(coil);
    for (int j = 0; j < coil.n_p; ++j) {
        p.delta_rho[static_cast<std::size_t>(j)] = ur(rng);
        p.delta_z[static_cast<std::size_t>(j)] = uz(rng);
    }
    return p;
}

// Edge-manifold check written against raw STL triangles: vertices are welded
// by exact float coordinates, each directed edge must appear once and its
// reverse once.
bool stl_is_closed_manifold(const std::vector<StlTriangle>& tris) {
    std::map<std::array<float, 3>, int> ids;
    auto id = [&](const std::array<float, 3>& v) {
        auto [it, inserted] = ids.try_emplace(v, static_cast<int>(ids.size()));
        return it->second;
    };
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : tris) {
        const int a = id(t.vertices[0]), b = id(t.vertices[1]), c = id(t.vertices[2]);
        if (a == b || b == c || a == c) return false;
        for (auto e : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) ++directed[e];
    }
    for (const auto& [e, n] : directed) {
        if (n != 1) return false;
        auto rev = directed.find({e.second, e.first});
        if (rev == directed.end() || rev->second != 1) return false;
    }
    return !tris.empty();
}

}  // namespace

TEST(CrossSection, ConstantRadiiGiveCircle) {
    const std::vector<double> r(6, 3.0);
    const auto c = interpolate_cross_section(r, 64);
    ASSERT_EQ(c.size(), 64u);
    for (double v : c.radii) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(CrossSection, PassesThroughInducingRadii) {
    const std::vector<double> r{2.1, 3.9, 3.2, 2.6, 2.0, 3.7};
    // resolution a multiple of n_c puts samples on the inducing angles
    const auto c = interpolate_cross_section(r, 96);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(c.radii[16 * i], r[i], 1e-6);
}

TEST(CrossSection, AlternatingRadiiHaveThreeFoldSymmetry) {
    const std::vector<double> r{2, 4, 2, 4, 2, 4};
    const auto c = interpolate_cross_section(r, 120);
    for (std::size_t m = 0; m < 120; ++m) EXPECT_NEAR(c.radii[m], c.radii[(m + 40) % 120], 1e-6);
    const auto [lo, hi] = std::minmax_element(c.radii.begin(), c.radii.end());
    EXPECT_LE(*lo / *hi, 0.5 + 1e-9);
}

TEST(CrossSection, Errors) {
    EXPECT_THROW(interpolate_cross_section(std::vector<double>(6, 3.0), 8), InvalidArgument);
    EXPECT_THROW(interpolate_cross_section(std::vector<double>{0.05, 0.05, 0.05, 0.05}, 32), DegenerateCrossSection);
}

TEST(Path, NominalHelix) {
    const NominalCoil coil;
    const auto line = build_path(PathParams::zero(coil), coil, 2001);
    for (const auto& p : line.points) EXPECT_NEAR(std::hypot(p.x(), p.y()), 12.5, 1e-12);
    EXPECT_NEAR(line.points.back().z() - line.points.front().z(), 20.8, 1e-12);
    // helix length 4 pi sqrt(C^2 + (p / 2 pi)^2)
    const double b = 10.4 / (2 * kPi);
    EXPECT_NEAR(line.length(), 4 * kPi * std::sqrt(12.5 * 12.5 + b * b), 1e-3);
}

TEST(Path, UniformHeightShift) {
    const NominalCoil coil;
    PathParams p = PathParams::zero(coil);
    std::fill(p.delta_z.begin(), p.delta_z.end(), 1.0);
    const auto base = build_path(PathParams::zero(coil), coil, 500);
    const auto up = build_path(p, coil, 500);
    for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_NEAR(up.points[i].z() - base.points[i].z(), 1.0, 1e-12);
        EXPECT_LE(up.points[i].z() - base.points[i].z(), 1.0 + 1e-12);
    }
}

TEST(Path, DeviationsHitStations) {
    const NominalCoil coil;
    PathParams p = PathParams::zero(coil);
    p.delta_rho = {1.0, -2.0, 3.5, 0.0, -3.5, 2.0};
    // 5 intervals * 20 samples => stations at every 20th sample
    const auto line = build_path(p, coil, 101);
    for (std::size_t j = 0; j < 6; ++j) {
        const auto& q = line.points[20 * j];
        EXPECT_NEAR(std::hypot(q.x(), q.y()), 12.5 + p.delta_rho[j], 1e-9);
    }
}

TEST(Path, InterTurnClearanceForRandomDraws) {
    const NominalCoil coil;
    std::mt19937_64 rng(11);
    const int n = 400;
    double worst = 1e9;
    for (int draw = 0; draw < 100; ++draw) {
        const auto line = build_path(random_path(coil, rng), coil, n);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                const double dphi = coil.total_angle() * (b - a) / (n - 1);
                if (dphi < kPi) continue;
                worst = std::min(worst, (line.points[static_cast<std::size_t>(a)] - line.points[static_cast<std::size_t>(b)]).norm());
            }
    }
    EXPECT_GT(worst, 2 * coil.radius_hi);
}

TEST(Path, RejectsOutOfBounds) {
    const NominalCoil coil;
    PathParams p = PathParams::zero(coil);
    p.delta_z[2] = 1.5;
    EXPECT_THROW(build_path(p, coil, 100), InvalidArgument);
}

TEST(Frames, StraightLineIsConstant) {
    const auto frames = transport_frames(straight_path(30.0, 50));
    for (const auto& f : frames) {
        EXPECT_EQ(f.tangent, frames[0].tangent);
        EXPECT_NEAR((f.normal - frames[0].normal).norm(), 0.0, 1e-15);
    }
}

TEST(Frames, PlanarCircleNormalStaysInPlane) {
    Centerline c;
    for (int k = 0; k <= 400; ++k) {
        const double t = 2 * kPi * k / 400 * 0.999;
        c.points.emplace_back(5 * std::cos(t), 5 * std::sin(t), 0.0);
    }
    c.compute_arclength();
    for (const auto& f : transport_frames(c)) {
        EXPECT_NEAR(f.tangent.dot(f.normal), 0.0, 1e-10);
        EXPECT_NEAR(f.normal.z(), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(f.binormal.z()), 1.0, 1e-10);
    }
}

TEST(Frames, HelixMatchesAnalyticTransport) {
    // RMF normal = cos(theta) N + sin(theta) B with theta' = -torsion
    const NominalCoil coil;
    const int n = 1000;
    const auto line = build_path(PathParams::zero(coil), coil, n);
    const auto frames = transport_frames(line);
    const double a = coil.coil_radius, b = coil.pitch / (2 * kPi);
    const double c = std::sqrt(a * a + b * b);
    const double torsion = b / (c * c);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const double phi = coil.total_angle() * k / (n - 1);
        const Vec3 tan(-a * std::sin(phi) / c, a * std::cos(phi) / c, b / c);
        const Vec3 nrm(-std::cos(phi), -std::sin(phi), 0.0);
        const Vec3 bin = tan.cross(nrm);
        const double theta = -torsion * c * phi;
        const Vec3 expected = std::cos(theta) * nrm + std::sin(theta) * bin;
        const auto& f = frames[static_cast<std::size_t>(k)];
        worst = std::max(worst, std::acos(std::clamp(f.normal.dot(expected), -1.0, 1.0)));
        EXPECT_NEAR(f.tangent.norm(), 1.0, 1e-12);
        EXPECT_NEAR(f.normal.norm(), 1.0, 1e-12);
        EXPECT_NEAR(f.binormal.norm(), 1.0, 1e-12);
        EXPECT_LT(std::abs(f.tangent.dot(f.normal)), 1e-10);
        EXPECT_LT(std::abs(f.tangent.dot(f.binormal)), 1e-10);
        EXPECT_LT(std::abs(f.normal.dot(f.binormal)), 1e-10);
    }
    EXPECT_LT(worst * 180 / kPi, 0.5);
}

TEST(Frames, RepeatedPointThrows) {
    Centerline c;
    c.points = {Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 1), Vec3(0, 0, 2)};
    c.compute_arclength();
    EXPECT_THROW(transport_frames(c), DegenerateTangent);
}

TEST(Validate, SphereVolume) {
    const auto s = uv_sphere(2.0, 50, 100);
    ASSERT_NEAR(static_cast<double>(s.triangles.size()), 1e4, 300);
    const auto r = validate_geometry(s);
    EXPECT_TRUE(r.watertight);
    EXPECT_TRUE(r.winding_consistent);
    EXPECT_TRUE(r.intersecting_pairs.empty());
    EXPECT_NEAR(r.volume, 4.0 / 3.0 * kPi * 8.0, 0.01 * 4.0 / 3.0 * kPi * 8.0);
}

TEST(Validate, DeletedTriangleLeavesThreeBoundaryEdges) {
    auto s = uv_sphere(1.0, 20, 30);
    s.triangles.erase(s.triangles.begin() + 100);
    s.groups.erase(s.groups.begin() + 100);
    s.triangle_s.erase(s.triangle_s.begin() + 100);
    const auto r = validate_geometry(s);
    EXPECT_FALSE(r.watertight);
    EXPECT_EQ(r.boundary_edges.size(), 3u);
}

TEST(Validate, FlippedTriangleBreaksWinding) {
    auto s = uv_sphere(1.0, 20, 30);
    std::swap(s.triangles[50][0], s.triangles[50][1]);
    EXPECT_FALSE(validate_geometry(s).winding_consistent);
}

TEST(Validate, CrossingTubesIntersect) {
    const auto a = straight_tube(Vec3(0, 0, -10), Vec3(0, 0, 1), 20, 2);
    const auto b = straight_tube(Vec3(-10, 0, 0), Vec3(1, 0, 0), 20, 2);
    EXPECT_TRUE(validate_geometry(a).valid());
    const auto both = validate_geometry(merge(a, b));
    EXPECT_FALSE(both.intersecting_pairs.empty());
    EXPECT_THROW(require_valid(merge(a, b), both), GeometryInvalid);
    // disjoint tubes are fine
    const auto c = straight_tube(Vec3(10, 0, -10), Vec3(0, 0, 1), 20, 2);
    EXPECT_TRUE(validate_geometry(merge(a, c)).intersecting_pairs.empty());
}

TEST(Loft, ConstantTubeOnNominalHelix) {
    const NominalCoil coil;
    Tessellation tess;
    tess.inlet_length = tess.outlet_length = 0.0;
    const auto surf = build_reactor({PathParams::zero(coil), std::nullopt}, coil, tess);
    for (const auto& ring : surf.rings)
        for (std::uint32_t v = ring.first; v < ring.first + ring.count; ++v)
            EXPECT_NEAR((surf.vertices[v] - ring.center).norm(), 3.0, 1e-6);
    const auto r = validate_geometry(surf);
    EXPECT_TRUE(r.valid());
    const double nominal = kPi * 9.0 * 4 * kPi * coil.coil_radius;
    EXPECT_NEAR(r.volume, nominal, 0.01 * nominal);
}

TEST(Loft, StationRingsMatchCrossSectionCurves) {
    const NominalCoil coil;
    std::mt19937_64 rng(5);
    const auto cs = random_cross_sections(coil, rng);
    const Tessellation tess;
    const FramedPath path = framed_path({PathParams::zero(coil), cs}, coil, tess);
    const auto field = RadiusField::build(coil, cs, path.line.length(), tess.ring_vertices);
    const auto tube = loft_surface(field, path, tess.rings_per_turn * coil.turns);
    for (std::size_t k = 1; k + 1 < field.stations().size(); ++k) {
        const Eigen::VectorXd row = cs.radii.row(static_cast<Eigen::Index>(k - 1)).transpose();
        const auto curve = interpolate_cross_section(std::span<const double>(row.data(), 6), tess.ring_vertices);
        const auto it = std::find_if(tube.rings.begin(), tube.rings.end(), [&](const Ring& r) { return r.s == field.stations()[k]; });
        ASSERT_NE(it, tube.rings.end());
        for (std::uint32_t j = 0; j < it->count; ++j)
            EXPECT_NEAR((tube.vertices[it->first + j] - it->center).norm(), curve.radii[j], 1e-9);
    }
}

TEST(Loft, RadiusFieldIsSmoothBetweenStations) {
    const RadiusField f({0, 1, 2, 3, 4}, {{3}, {4}, {2}, {4}, {3}});
    for (double s : {0.0, 1.0, 2.0, 3.0, 4.0}) EXPECT_EQ(f(s, 0), (std::vector<double>{3, 4, 2, 4, 3})[static_cast<std::size_t>(s)]);
    for (double s : {1.0, 2.0, 3.0}) {
        const double h = 1e-6;
        const double left = (f(s, 0) - f(s - h, 0)) / h, right = (f(s + h, 0) - f(s, 0)) / h;
        EXPECT_NEAR(left, right, 1e-4);
    }
}

TEST(Ports, ZeroLengthAddsCapsOnly) {
    const NominalCoil coil;
    const Tessellation tess;
    const FramedPath path = framed_path({PathParams::zero(coil), std::nullopt}, coil, tess);
    const auto field = RadiusField::build(coil, std::nullopt, path.line.length(), tess.ring_vertices);
    const auto tube = loft_surface(field, path, tess.rings_per_turn * coil.turns);
    const auto capped = add_ports(tube, 0.0, 0.0);
    EXPECT_EQ(capped.vertices.size(), tube.vertices.size() + 2);
    EXPECT_EQ(capped.triangles.size(), tube.triangles.size() + 2 * 48);
    EXPECT_TRUE(validate_geometry(capped).valid());

    // volume and area grow by exactly a prism on the 48-gon per port
    const auto ported = add_ports(tube, 10.0, 10.0);
    EXPECT_TRUE(validate_geometry(ported).valid());
    const double polygon_area = 0.5 * 48 * 9.0 * std::sin(2 * kPi / 48);
    const double polygon_perimeter = 48 * 2 * 3.0 * std::sin(kPi / 48);
    EXPECT_NEAR(signed_volume(ported) - signed_volume(capped), 2 * 10.0 * polygon_area, 1e-9 * signed_volume(ported));
    const double d_area = surface_area(ported) - surface_area(capped);
    EXPECT_NEAR(d_area, 2 * 10.0 * polygon_perimeter, 1e-9 * d_area);
    EXPECT_NEAR(d_area, 2 * (2 * kPi * 3.0 * 10.0), 0.01 * d_area);
    EXPECT_THROW(add_ports(ported, 1.0, 1.0), InvalidArgument);
}

TEST(Ports, NonCircularEndRejected) {
    Centerline c = straight_path(10.0, 11);
    const RadiusField field({0.0, 10.0}, {std::vector<double>{2, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 3, 2, 3}, std::vector<double>(16, 3.0)});
    const auto tube = loft_surface(field, FramedPath(c), 4);
    EXPECT_THROW(add_ports(tube, 1.0, 1.0), InvalidArgument);
}

TEST(Reactor, RandomCrossSectionDrawsAreValid) {
    const NominalCoil coil;
    std::mt19937_64 rng(2024);
    for (int draw = 0; draw < 100; ++draw) {
        const auto surf = build_reactor({PathParams::zero(coil), random_cross_sections(coil, rng)}, coil);
        const auto r = validate_geometry(surf);
        ASSERT_TRUE(r.valid()) << "draw " << draw;
        EXPECT_GT(r.min_radius, kMinCrossSectionRadius);
    }
}

TEST(Reactor, RandomPathDrawsAreValid) {
    const NominalCoil coil;
    std::mt19937_64 rng(2025);
    for (int draw = 0; draw < 100; ++draw) {
        const auto surf = build_reactor({random_path(coil, rng), std::nullopt}, coil);
        ASSERT_TRUE(validate_geometry(surf).valid()) << "draw " << draw;
    }
}

TEST(Stl, TetrahedronSize) {
    ReactorSurface s;
    s.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    s.add_triangle(0, 2, 1, FaceGroup::wall, 0);
    s.add_triangle(0, 1, 3, FaceGroup::wall, 0);
    s.add_triangle(0, 3, 2, FaceGroup::wall, 0);
    s.add_triangle(1, 2, 3, FaceGroup::wall, 0);
    EXPECT_TRUE(validate_geometry(s).valid());
    const auto bytes = export_stl(s);
    EXPECT_EQ(bytes.size(), 284u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[80]), 4);
    const auto tris = parse_stl(bytes);
    ASSERT_EQ(tris.size(), 4u);
    EXPECT_FLOAT_EQ(tris[3].normal[0], static_cast<float>(1 / std::sqrt(3.0)));
}

TEST(Stl, RoundTripAndManifold) {
    const NominalCoil coil;
    const auto surf = build_reactor({PathParams::zero(coil), std::nullopt}, coil);
    const auto bytes = export_stl(surf);
    EXPECT_EQ(bytes, export_stl(surf));
    const auto tris = parse_stl(bytes);
    ASSERT_EQ(tris.size(), surf.triangles.size());
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (int v = 0; v < 3; ++v)
            for (int d = 0; d < 3; ++d)
                ASSERT_EQ(tris[t].vertices[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)],
                          static_cast<float>(surf.vertices[surf.triangles[t][static_cast<std::size_t>(v)]][d]));
    EXPECT_TRUE(stl_is_closed_manifold(tris));
    EXPECT_THROW(parse_stl(bytes.substr(0, 100)), InvalidArgument);
}

TEST(Reactor, CircularTriangleCountMatchesFormula) {
    const NominalCoil coil;
    const Tessellation tess;
    const auto surf = build_reactor({PathParams::zero(coil), std::nullopt}, coil, tess);
    EXPECT_EQ(surf.triangles.size(), circular_triangle_count(coil, tess));
    // 129 coil rings, 26 rings per port, 48 vertices per ring
    EXPECT_EQ(circular_triangle_count(coil, tess), 17376u);
}
