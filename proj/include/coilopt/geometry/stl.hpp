#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/geometry/mesh.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

namespace coilopt::geometry {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(b)])) << (8 * b);
    return v;
}

}  // namespace detail

/// Binary STL, little-endian regardless of host. Normals come from the
/// winding; degenerate triangles get a zero normal.
inline std::string export_stl(const ReactorSurface& s, const std::string& header = "coilopt reactor") {
    if (s.triangles.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("too many triangles for STL");
    std::string out(80, '\0');
    std::memcpy(out.data(), header.data(), std::min<std::size_t>(header.size(), 80));
    out.reserve(84 + 50 * s.triangles.size());
    detail::put_u32(out, static_cast<std::uint32_t>(s.triangles.size()));
    for (const auto& t : s.triangles) {
        const Vec3& a = s.vertices[t[0]];
        const Vec3& b = s.vertices[t[1]];
        const Vec3& c = s.vertices[t[2]];
        Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
        for (int d = 0; d < 3; ++d) detail::put_f32(out, static_cast<float>(n[d]));
        for (const Vec3* v : {&a, &b, &c})
            for (int d = 0; d < 3; ++d) detail::put_f32(out, static_cast<float>((*v)[d]));
        out.push_back('\0');
        out.push_back('\0');
    }
    return out;
}

struct StlTriangle {
    std::array<float, 3> normal;
    std::array<std::array<float, 3>, 3> vertices;
};

inline std::vector<StlTriangle> parse_stl(const std::string& bytes) {
    if (bytes.size() < 84) throw InvalidArgument("STL shorter than its header");
    const std::uint32_t n = detail::get_u32(bytes, 80);
    if (bytes.size() != 84 + 50 * static_cast<std::size_t>(n)) throw InvalidArgument("STL size does not match triangle count");
    std::vector<StlTriangle> out(n);
    std::size_t pos = 84;
    auto f = [&] {
        const float v = std::bit_cast<float>(detail::get_u32(bytes, pos));
        pos += 4;
        return v;
    };
    for (auto& t : out) {
        for (auto& x : t.normal) x = f();
        for (auto& v : t.vertices)
            for (auto& x : v) x = f();
        pos += 2;
    }
    return out;
}

}  // namespace coilopt::geometry
