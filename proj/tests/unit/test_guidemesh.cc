// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "primvol/error.h"
#include "primvol/guidemesh.h"

namespace primvol {
namespace {

GuideMesh parse(const std::string& text) { std::istringstream in(text); return parse_obj(in, "test.obj"); }

const char* kQuadObj =
    "# unit quad\n"
    "v -1 -1 0\nv 1 -1 0\nv 1 1 0\nv -1 1 0\n"
    "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
    "vn 0 0 1\n"
    "f 1/1/1 2/2/1 3/3/1\n"
    "f 1/1/1 3/3/1 4/4/1\n";

// Closest point on triangle (a, b, c) to p, by region tests.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double distance_to_mesh(const GuideMesh& mesh, const Vec3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : mesh.faces)
        best = std::min(best, norm(p - closest_on_triangle(p, mesh.positions[f.position[0]],
                                                           mesh.positions[f.position[1]],
                                                           mesh.positions[f.position[2]])));
    return best;
}

TEST(LoadMesh, QuadHasFourVerticesTwoFaces)
{
    const GuideMesh m = parse(kQuadObj);
    EXPECT_EQ(m.positions.size(), 4u);
    EXPECT_EQ(m.faces.size(), 2u);
    double lo = 1, hi = 0;
    for (const Vec2& t : m.uvs) {
        lo = std::min({lo, t.u, t.v});
        hi = std::max({hi, t.u, t.v});
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
}

TEST(LoadMesh, ZeroIndexNamesTheLine)
{
    try {
        parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 0/1 2/2 3/3\n");
        FAIL() << "expected a parse error";
    } catch (const MeshError& e) {
        EXPECT_EQ(e.kind(), MeshError::Kind::Parse);
        EXPECT_EQ(e.line(), 7);
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
    }
}

TEST(LoadMesh, MissingUvsIsDistinctError)
{
    try {
        parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        FAIL() << "expected a no-uv error";
    } catch (const MeshError& e) {
        EXPECT_EQ(e.kind(), MeshError::Kind::NoUv);
    }
}

TEST(LoadMesh, OtherMalformedInputs)
{
    EXPECT_THROW(parse("v 0 0\n"), MeshError);
    EXPECT_THROW(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 1/1\n"), MeshError);
    EXPECT_THROW(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 9/3\n"), MeshError);
    // Degenerate UV triangle.
    EXPECT_THROW(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nf 1/1 2/2 3/2\n"), MeshError);
    try {
        load_mesh("/nonexistent/mesh.obj");
        FAIL();
    } catch (const MeshError& e) {
        EXPECT_EQ(e.kind(), MeshError::Kind::Io);
    }
}

TEST(LoadMesh, ObjRoundTrip)
{
    const GuideMesh sphere = make_uv_sphere(1.3, 12, 7);
    const auto path = std::filesystem::temp_directory_path() / "primvol_sphere.obj";
    std::ofstream(path) << to_obj(sphere);
    const GuideMesh back = load_mesh(path);
    ASSERT_EQ(back.positions.size(), sphere.positions.size());
    ASSERT_EQ(back.faces.size(), sphere.faces.size());
    for (std::size_t i = 0; i < back.positions.size(); ++i) EXPECT_EQ(back.positions[i], sphere.positions[i]);
    for (std::size_t i = 0; i < back.faces.size(); ++i) {
        EXPECT_EQ(back.faces[i].position, sphere.faces[i].position);
        EXPECT_EQ(back.faces[i].uv, sphere.faces[i].uv);
    }
}

TEST(Anchors, PlanarQuadGridOfTwo)
{
    const AnchorSet a = anchor_primitives(parse(kQuadObj), 2);
    ASSERT_EQ(a.size(), 4u);
    // UV (u, v) maps to (2u - 1, 2v - 1, 0); cell (i, j) is index j * 2 + i.
    const Vec3 expected[4] = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {-0.5, 0.5, 0}, {0.5, 0.5, 0}};
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(norm(a.positions[k] - expected[k]), 0.0, 1e-12) << k;
        EXPECT_NEAR(norm(a.rotations[k].rotate({0, 0, 1}) - Vec3{0, 0, 1}), 0.0, 1e-12);
        EXPECT_NEAR(norm(a.rotations[k].rotate({1, 0, 0}) - Vec3{1, 0, 0}), 0.0, 1e-12);  // tangent along +u
        EXPECT_FALSE(a.inherited[k]);
    }
}

TEST(Anchors, SingleCellSitsUnderUvCenter)
{
    const AnchorSet a = anchor_primitives(make_quad(2.0), 1);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_NEAR(norm(a.positions[0]), 0.0, 1e-12);
    const AnchorSet s = anchor_primitives(make_uv_sphere(1.0, 16, 8), 1);
    // UV (0.5, 0.5) is longitude 0 on the equator: (0, 0, 1) on the unit sphere.
    EXPECT_NEAR(distance_to_mesh(make_uv_sphere(1.0, 16, 8), s.positions[0]), 0.0, 1e-9);
    EXPECT_NEAR(s.positions[0].z, 1.0, 1e-9);
}

TEST(Anchors, GridOf32Gives1024)
{
    const AnchorSet a = anchor_primitives(make_uv_sphere(1.0, 32, 16), 32);
    EXPECT_EQ(a.size(), 1024u);
    EXPECT_EQ(a.grid_side, 32);
}

TEST(Anchors, OnSurfaceAndProperFrames)
{
    const GuideMesh mesh = make_uv_sphere(0.8, 24, 12);
    const AnchorSet a = anchor_primitives(mesh, 16);
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!a.inherited[k]) EXPECT_LT(distance_to_mesh(mesh, a.positions[k]), 1e-9) << k;
        const Mat3 r = a.rotations[k].matrix();
        EXPECT_NEAR(r.determinant(), 1.0, 1e-6);
        const Mat3 rtr = r.transpose() * r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_NEAR(rtr.m[i][j], i == j ? 1.0 : 0.0, 1e-6);
        EXPECT_TRUE(is_finite(a.positions[k]));
    }
    EXPECT_GT(a.base_scale.x, 0.0);
}

TEST(Anchors, UncoveredCellsInheritNearest)
{
    // One triangle covering the lower-left half of UV space.
    const GuideMesh half = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n");
    const AnchorSet a = anchor_primitives(half, 4);
    int inherited = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!a.inherited[k]) continue;
        ++inherited;
        // The copy equals some covered anchor.
        bool found = false;
        for (std::size_t c = 0; c < a.size(); ++c)
            if (!a.inherited[c] && a.positions[c] == a.positions[k]) found = true;
        EXPECT_TRUE(found);
    }
    EXPECT_GT(inherited, 0);
    EXPECT_EQ(a.size(), 16u);
}

TEST(Anchors, NoCoverageIsAnError)
{
    // Tiny UV triangle that contains no 1x1 cell center.
    const GuideMesh tiny = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 0.1 0\nvt 0 0.1\nf 1/1 2/2 3/3\n");
    EXPECT_THROW(anchor_primitives(tiny, 1), ArgumentError);
    EXPECT_THROW(anchor_primitives(tiny, 0), ArgumentError);
}

TEST(Anchors, DefaultBaseScaleFormula)
{
    const GuideMesh quad = make_quad(1.0);  // bounding diagonal 2 sqrt(2)
    const Vec3 s = default_base_scale(quad, 4);
    EXPECT_DOUBLE_EQ(s.x, 2.0 * std::sqrt(2.0) / 3.0 / 4.0);
    EXPECT_EQ(s.x, s.y);
    EXPECT_EQ(s.y, s.z);
    EXPECT_EQ(anchor_primitives(quad, 2, Vec3{0.1, 0.2, 0.3}).base_scale, (Vec3{0.1, 0.2, 0.3}));
    EXPECT_THROW(anchor_primitives(quad, 2, Vec3{0.1, 0.0, 0.3}), ArgumentError);
}

TEST(Anchors, Deterministic)
{
    const GuideMesh mesh = make_uv_sphere(1.0, 20, 10);
    const AnchorSet a = anchor_primitives(mesh, 9), b = anchor_primitives(mesh, 9);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a.positions[k], b.positions[k]);
        EXPECT_EQ(a.rotations[k], b.rotations[k]);
        EXPECT_EQ(a.inherited[k], b.inherited[k]);
    }
}

}  // namespace
}  // namespace primvol
