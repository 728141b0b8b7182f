// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/guidemesh.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "primvol/error.h"

namespace primvol {

namespace {

constexpr double kMinUvArea = 1e-12;

MeshError parse_error(const std::string& source, int line, const std::string& msg)
{
    return MeshError(MeshError::Kind::Parse,
                     source + ":" + std::to_string(line) + ": " + msg, line);
}

// Parses one "a/b[/c]" face corner into zero-based indices.
void parse_corner(const std::string& token, const std::string& source, int line, int& v, int& t)
{
    const auto slash = token.find('/');
    if (slash == std::string::npos)
        throw parse_error(source, line, "face corner '" + token + "' has no UV index");
    const auto second = token.find('/', slash + 1);
    const std::string vs = token.substr(0, slash);
    const std::string ts =
        token.substr(slash + 1, second == std::string::npos ? std::string::npos : second - slash - 1);
    if (ts.empty()) throw parse_error(source, line, "face corner '" + token + "' has no UV index");
    try {
        std::size_t used = 0;
        v = std::stoi(vs, &used);
        if (used != vs.size()) throw std::invalid_argument(vs);
        t = std::stoi(ts, &used);
        if (used != ts.size()) throw std::invalid_argument(ts);
    } catch (const std::exception&) {
        throw parse_error(source, line, "bad face corner '" + token + "'");
    }
    if (v < 1 || t < 1)
        throw parse_error(source, line, "face index must be 1-based and positive in '" + token + "'");
    --v;
    --t;
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Barycentric coordinates of p in the UV triangle, or nullopt when outside.
std::optional<std::array<double, 3>> uv_barycentric(const Vec2& a, const Vec2& b, const Vec2& c,
                                                    const Vec2& p)
{
    const double area = cross2(b.u - a.u, b.v - a.v, c.u - a.u, c.v - a.v);
    if (std::abs(area) < kMinUvArea) return std::nullopt;
    const double l1 = cross2(p.u - a.u, p.v - a.v, c.u - a.u, c.v - a.v) / area;
    const double l2 = cross2(b.u - a.u, b.v - a.v, p.u - a.u, p.v - a.v) / area;
    const double l0 = 1.0 - l1 - l2;
    constexpr double eps = -1e-12;
    if (l0 < eps || l1 < eps || l2 < eps) return std::nullopt;
    return std::array<double, 3>{l0, l1, l2};
}

Vec3 any_perpendicular(const Vec3& n)
{
    const Vec3 axis = std::abs(n.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    return normalize(cross(axis, n));
}

Rotation face_frame(const GuideMesh& mesh, const GuideMesh::Face& f)
{
    const Vec3& p0 = mesh.positions[f.position[0]];
    const Vec3 e1 = mesh.positions[f.position[1]] - p0;
    const Vec3 e2 = mesh.positions[f.position[2]] - p0;
    const Vec2& t0 = mesh.uvs[f.uv[0]];
    const double du1 = mesh.uvs[f.uv[1]].u - t0.u, dv1 = mesh.uvs[f.uv[1]].v - t0.v;
    const double du2 = mesh.uvs[f.uv[2]].u - t0.u, dv2 = mesh.uvs[f.uv[2]].v - t0.v;
    const double det = du1 * dv2 - du2 * dv1;

    const Vec3 dp_du = (e1 * dv2 - e2 * dv1) / det;
    const Vec3 dp_dv = (e2 * du1 - e1 * du2) / det;

    Vec3 n = cross(dp_du, dp_dv);
    if (norm(n) < 1e-12) n = cross(e1, e2) * (det < 0.0 ? -1.0 : 1.0);
    if (norm(n) < 1e-12) n = {0.0, 0.0, 1.0};  // degenerate in 3D; any proper frame will do
    n = normalize(n);

    Vec3 t = dp_du - n * dot(dp_du, n);
    t = norm(t) < 1e-12 ? any_perpendicular(n) : normalize(t);
    const Vec3 b = cross(n, t);
    return Rotation::from_matrix(Mat3::from_columns(t, b, n));
}

}  // namespace

double GuideMesh::uv_area(const Face& f) const
{
    const Vec2& a = uvs[f.uv[0]];
    const Vec2& b = uvs[f.uv[1]];
    const Vec2& c = uvs[f.uv[2]];
    return 0.5 * std::abs(cross2(b.u - a.u, b.v - a.v, c.u - a.u, c.v - a.v));
}

void GuideMesh::validate() const
{
    if (faces.empty()) throw MeshError(MeshError::Kind::Invalid, "mesh has no faces");
    if (uvs.empty()) throw MeshError(MeshError::Kind::NoUv, "mesh has no UV coordinates");
    for (const Vec3& p : positions)
        if (!is_finite(p)) throw MeshError(MeshError::Kind::Invalid, "non-finite vertex position");
    for (const Vec2& t : uvs)
        if (!(t.u >= 0.0 && t.u <= 1.0 && t.v >= 0.0 && t.v <= 1.0))
            throw MeshError(MeshError::Kind::Invalid, "UV coordinate outside [0,1]^2");
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const Face& f = faces[i];
        for (int k = 0; k < 3; ++k) {
            if (f.position[k] < 0 || f.position[k] >= static_cast<int>(positions.size()) ||
                f.uv[k] < 0 || f.uv[k] >= static_cast<int>(uvs.size()))
                throw MeshError(MeshError::Kind::Invalid,
                                "face " + std::to_string(i) + " index out of range");
        }
        if (uv_area(f) <= kMinUvArea)
            throw MeshError(MeshError::Kind::Invalid,
                            "face " + std::to_string(i) + " has a degenerate UV triangle");
    }
}

GuideMesh parse_obj(std::istream& in, const std::string& source)
{
    GuideMesh mesh;
    std::vector<int> face_lines;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) throw parse_error(source, line_no, "bad vertex record");
            mesh.positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            if (!(ls >> t.u >> t.v)) throw parse_error(source, line_no, "bad texture coordinate");
            mesh.uvs.push_back(t);
        } else if (tag == "f") {
            std::vector<std::string> corners;
            std::string tok;
            while (ls >> tok) corners.push_back(tok);
            if (corners.size() != 3)
                throw parse_error(source, line_no, "faces must be triangles");
            GuideMesh::Face f{};
            bool has_uv = true;
            for (int k = 0; k < 3; ++k) {
                if (corners[k].find('/') == std::string::npos ||
                    corners[k].find("//") != std::string::npos) {
                    has_uv = false;
                    break;
                }
                parse_corner(corners[k], source, line_no, f.position[k], f.uv[k]);
            }
            if (!has_uv) {
                if (mesh.uvs.empty())
                    throw MeshError(MeshError::Kind::NoUv,
                                    source + ": mesh has no 'vt' records (no-uv)", line_no);
                throw parse_error(source, line_no, "face without UV indices");
            }
            mesh.faces.push_back(f);
            face_lines.push_back(line_no);
        }
    }
    if (mesh.uvs.empty())
        throw MeshError(MeshError::Kind::NoUv, source + ": mesh has no 'vt' records (no-uv)");
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        for (int k = 0; k < 3; ++k) {
            if (f.position[k] >= static_cast<int>(mesh.positions.size()))
                throw parse_error(source, face_lines[i], "vertex index out of range");
            if (f.uv[k] >= static_cast<int>(mesh.uvs.size()))
                throw parse_error(source, face_lines[i], "UV index out of range");
        }
    }
    mesh.validate();
    return mesh;
}

GuideMesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw MeshError(MeshError::Kind::Io, "cannot open mesh " + path.string());
    return parse_obj(in, path.string());
}

std::string to_obj(const GuideMesh& mesh)
{
    std::ostringstream out;
    out << std::setprecision(17);
    for (const Vec3& p : mesh.positions) out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
    for (const Vec2& t : mesh.uvs) out << "vt " << t.u << ' ' << t.v << '\n';
    for (const auto& f : mesh.faces) {
        out << 'f';
        for (int k = 0; k < 3; ++k) out << ' ' << f.position[k] + 1 << '/' << f.uv[k] + 1;
        out << '\n';
    }
    return out.str();
}

Vec3 default_base_scale(const GuideMesh& mesh, int grid_side)
{
    Vec3 lo = Vec3::splat(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& p : mesh.positions)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    const double s = norm(hi - lo) / 3.0 / grid_side;
    return Vec3::splat(s);
}

AnchorSet anchor_primitives(const GuideMesh& mesh, int grid_side, std::optional<Vec3> base_scale)
{
    if (grid_side < 1) throw ArgumentError("anchor grid side must be >= 1");
    mesh.validate();

    const int g = grid_side;
    const std::size_t n = static_cast<std::size_t>(g) * g;
    AnchorSet anchors;
    anchors.grid_side = g;
    anchors.positions.resize(n);
    anchors.rotations.resize(n);
    anchors.inherited.assign(n, true);
    anchors.base_scale = base_scale.value_or(default_base_scale(mesh, g));
    if (!(anchors.base_scale.x > 0.0 && anchors.base_scale.y > 0.0 && anchors.base_scale.z > 0.0))
        throw ArgumentError("anchor base scale must be positive");

    std::vector<Rotation> frames;
    frames.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) frames.push_back(face_frame(mesh, f));

    std::vector<std::size_t> covered;
    for (int j = 0; j < g; ++j) {
        for (int i = 0; i < g; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * g + i;
            const Vec2 p{(i + 0.5) / g, (j + 0.5) / g};
            for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
                const auto& f = mesh.faces[fi];
                const auto bary =
                    uv_barycentric(mesh.uvs[f.uv[0]], mesh.uvs[f.uv[1]], mesh.uvs[f.uv[2]], p);
                if (!bary) continue;
                anchors.positions[k] = mesh.positions[f.position[0]] * (*bary)[0] +
                                       mesh.positions[f.position[1]] * (*bary)[1] +
                                       mesh.positions[f.position[2]] * (*bary)[2];
                anchors.rotations[k] = frames[fi];
                anchors.inherited[k] = false;
                covered.push_back(k);
                break;
            }
        }
    }
    if (covered.empty()) throw ArgumentError("no UV grid cell is covered by the mesh");

    for (std::size_t k = 0; k < n; ++k) {
        if (!anchors.inherited[k]) continue;
        const int i = static_cast<int>(k % g), j = static_cast<int>(k / g);
        std::size_t best = covered.front();
        long best_d = std::numeric_limits<long>::max();
        for (std::size_t c : covered) {
            const long di = static_cast<long>(c % g) - i, dj = static_cast<long>(c / g) - j;
            const long d = di * di + dj * dj;
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        anchors.positions[k] = anchors.positions[best];
        anchors.rotations[k] = anchors.rotations[best];
    }
    return anchors;
}

GuideMesh make_uv_sphere(double radius, int segments, int rings)
{
    if (segments < 3 || rings < 2) throw ArgumentError("sphere needs segments >= 3, rings >= 2");
    GuideMesh mesh;
    constexpr double pi = std::numbers::pi;
    auto point = [&](double u, double v) {
        const double lon = 2.0 * pi * u - pi;
        const double lat = pi * (v - 0.5);
        return Vec3{radius * std::cos(lat) * std::sin(lon), radius * std::sin(lat),
                    radius * std::cos(lat) * std::cos(lon)};
    };
    // Interior rings j = 1..rings-1; the seam column i = segments reuses i = 0 positions.
    auto ring_pos = [&](int i, int j) { return (j - 1) * segments + (i % segments); };
    auto ring_uv = [&](int i, int j) { return (j - 1) * (segments + 1) + i; };
    for (int j = 1; j < rings; ++j)
        for (int i = 0; i < segments; ++i)
            mesh.positions.push_back(point(static_cast<double>(i) / segments,
                                           static_cast<double>(j) / rings));
    for (int j = 1; j < rings; ++j)
        for (int i = 0; i <= segments; ++i)
            mesh.uvs.push_back({static_cast<double>(i) / segments, static_cast<double>(j) / rings});

    const int south = static_cast<int>(mesh.positions.size());
    mesh.positions.push_back({0.0, -radius, 0.0});
    const int north = south + 1;
    mesh.positions.push_back({0.0, radius, 0.0});
    const int pole_uv = static_cast<int>(mesh.uvs.size());
    for (int i = 0; i < segments; ++i) mesh.uvs.push_back({(i + 0.5) / segments, 0.0});
    for (int i = 0; i < segments; ++i) mesh.uvs.push_back({(i + 0.5) / segments, 1.0});

    for (int i = 0; i < segments; ++i) {
        mesh.faces.push_back({{south, ring_pos(i + 1, 1), ring_pos(i, 1)},
                              {pole_uv + i, ring_uv(i + 1, 1), ring_uv(i, 1)}});
        for (int j = 1; j + 1 < rings; ++j) {
            mesh.faces.push_back({{ring_pos(i, j), ring_pos(i + 1, j), ring_pos(i + 1, j + 1)},
                                  {ring_uv(i, j), ring_uv(i + 1, j), ring_uv(i + 1, j + 1)}});
            mesh.faces.push_back({{ring_pos(i, j), ring_pos(i + 1, j + 1), ring_pos(i, j + 1)},
                                  {ring_uv(i, j), ring_uv(i + 1, j + 1), ring_uv(i, j + 1)}});
        }
        mesh.faces.push_back({{ring_pos(i, rings - 1), ring_pos(i + 1, rings - 1), north},
                              {ring_uv(i, rings - 1), ring_uv(i + 1, rings - 1),
                               pole_uv + segments + i}});
    }
    mesh.validate();
    return mesh;
}

GuideMesh make_quad(double half_size)
{
    GuideMesh mesh;
    const double h = half_size;
    mesh.positions = {{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
    mesh.uvs = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    mesh.faces = {{{0, 1, 2}, {0, 1, 2}}, {{0, 2, 3}, {0, 2, 3}}};
    return mesh;
}

}  // namespace primvol
