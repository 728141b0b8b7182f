// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "primvol/accel.h"
#include "test_util.h"

namespace primvol {
namespace {

Ray make_ray(const Vec3& origin, const Vec3& dir, double t0 = 0.0, double t1 = 100.0)
{
    return {origin, normalize(dir), t0, t1};
}

Ray random_ray(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    const Vec3 origin = normalize(Vec3{n(rng), n(rng), n(rng)}) * 4.0;
    const Vec3 target{0.8 * u(rng), 0.8 * u(rng), 0.8 * u(rng)};
    const double t0 = 0.5 + 2.0 * std::abs(u(rng));
    return make_ray(origin, target - origin, t0, t0 + 1.0 + 5.0 * std::abs(u(rng)));
}

// Independent oracle: ray-plane slab test in world space using the box's axes.
std::optional<std::pair<double, double>> world_slab(const Ray& ray, const Primitive& p)
{
    double lo = ray.t_min, hi = ray.t_max;
    for (int a = 0; a < 3; ++a) {
        Vec3 e;
        e[a] = 1.0;
        const Vec3 axis = p.rotation.rotate(e);
        const double o = dot(ray.origin - p.position, axis);
        const double d = dot(ray.direction, axis);
        if (std::abs(d) < 1e-300) {
            if (std::abs(o) > p.scale[a]) return std::nullopt;
            continue;
        }
        double t0 = (-p.scale[a] - o) / d, t1 = (p.scale[a] - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    }
    if (!(lo < hi)) return std::nullopt;
    return std::make_pair(lo, hi);
}

void check_tree(const Bvh& bvh, const PrimitiveSet& scene)
{
    const auto& nodes = bvh.nodes();
    ASSERT_FALSE(nodes.empty());
    std::multiset<int> seen(bvh.order().begin(), bvh.order().end());
    ASSERT_EQ(seen.size(), scene.size());
    for (std::size_t k = 0; k < scene.size(); ++k) EXPECT_EQ(seen.count(static_cast<int>(k)), 1u);
    for (const BvhNode& n : nodes) {
        if (n.is_leaf()) {
            EXPECT_LE(n.count, Bvh::kMaxLeafSize);
            for (int i = n.first; i < n.first + n.count; ++i)
                for (const Vec3& c : scene.primitives[bvh.order()[i]].corners()) EXPECT_TRUE(n.bounds.contains(c));
        } else {
            EXPECT_TRUE(n.bounds.contains(nodes[n.left].bounds));
            EXPECT_TRUE(n.bounds.contains(nodes[n.right].bounds));
        }
    }
}

TEST(Bvh, SinglePrimitiveIsOneLeaf)
{
    std::mt19937_64 rng(1);
    const PrimitiveSet s = testing::random_scene(rng, {.count = 1});
    const Bvh bvh = Bvh::build(s);
    ASSERT_EQ(bvh.nodes().size(), 1u);
    EXPECT_TRUE(bvh.nodes()[0].is_leaf());
    for (const Vec3& c : s.primitives[0].corners()) EXPECT_TRUE(bvh.nodes()[0].bounds.contains(c));
}

TEST(Bvh, ThousandPrimitivesArePermutation)
{
    std::mt19937_64 rng(2);
    const PrimitiveSet s = testing::random_scene(rng, {.count = 1024, .resolution = 1, .extent = 3.0});
    const Bvh bvh = Bvh::build(s);
    check_tree(bvh, s);
}

TEST(Bvh, RootIsUnionOfLeaves)
{
    std::mt19937_64 rng(3);
    const PrimitiveSet s = testing::random_scene(rng, {.count = 37, .resolution = 1});
    const Bvh bvh = Bvh::build(s);
    Aabb u;
    for (const BvhNode& n : bvh.nodes())
        if (n.is_leaf()) u.expand(n.bounds);
    EXPECT_EQ(bvh.nodes()[0].bounds, u);
    check_tree(bvh, s);
}

TEST(Bvh, BuildIsDeterministic)
{
    std::mt19937_64 rng(4);
    const PrimitiveSet s = testing::random_scene(rng, {.count = 100, .resolution = 1});
    const Bvh a = Bvh::build(s), b = Bvh::build(s);
    EXPECT_EQ(a.order(), b.order());
    ASSERT_EQ(a.nodes().size(), b.nodes().size());
    for (std::size_t i = 0; i < a.nodes().size(); ++i) EXPECT_EQ(a.nodes()[i].bounds, b.nodes()[i].bounds);
}

TEST(Intersect, UnitBoxSlab)
{
    const PrimitiveSet s = testing::box_scene({}, {1.0, 1.0, 1.0}, {1, 1, 1}, 1.0);
    const Bvh bvh = Bvh::build(s);
    const RayHitList hits = intersect(make_ray({-2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}), s, bvh);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].primitive, 0);
    EXPECT_DOUBLE_EQ(hits[0].t_enter, 1.0);
    EXPECT_DOUBLE_EQ(hits[0].t_exit, 3.0);
    EXPECT_TRUE(intersect(make_ray({-2.0, 2.0, 0.0}, {1.0, 0.0, 0.0}), s, bvh).empty());
}

TEST(Intersect, ClippedToRayBounds)
{
    const PrimitiveSet s = testing::box_scene({}, {1.0, 1.0, 1.0}, {1, 1, 1}, 1.0);
    const Bvh bvh = Bvh::build(s);
    const RayHitList hits = intersect(make_ray({-2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.5, 2.5), s, bvh);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].t_enter, 1.5);
    EXPECT_EQ(hits[0].t_exit, 2.5);
    EXPECT_TRUE(intersect(make_ray({-2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 3.5, 5.0), s, bvh).empty());
    // Zero-length overlap does not count.
    EXPECT_TRUE(intersect(make_ray({-2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 0.0, 1.0), s, bvh).empty());
}

TEST(Intersect, MatchesBruteForceAndWorldOracle)
{
    std::mt19937_64 rng(5);
    int total_hits = 0;
    for (int scene_i = 0; scene_i < 10; ++scene_i) {
        const PrimitiveSet s = testing::random_scene(rng, {.count = 1 + scene_i * 25, .resolution = 1});
        const Bvh bvh = Bvh::build(s);
        for (int r = 0; r < 1000; ++r) {
            const Ray ray = random_ray(rng);
            const RayHitList fast = intersect(ray, s, bvh);
            const RayHitList brute = intersect_brute_force(ray, s);
            ASSERT_EQ(fast.size(), brute.size());
            for (std::size_t i = 0; i < fast.size(); ++i) {
                EXPECT_EQ(fast[i].primitive, brute[i].primitive);
                EXPECT_NEAR(fast[i].t_enter, brute[i].t_enter, 1e-9);
                EXPECT_NEAR(fast[i].t_exit, brute[i].t_exit, 1e-9);
            }
            std::set<int> oracle_set;
            for (std::size_t k = 0; k < s.size(); ++k) {
                const auto iv = world_slab(ray, s.primitives[k]);
                if (iv && iv->second - iv->first > 1e-9) oracle_set.insert(static_cast<int>(k));
            }
            std::set<int> fast_set;
            for (const Hit& h : fast) {
                fast_set.insert(h.primitive);
                const auto iv = world_slab(ray, s.primitives[h.primitive]);
                if (!iv) continue;  // grazing hit within rounding
                EXPECT_NEAR(h.t_enter, iv->first, 1e-9);
                EXPECT_NEAR(h.t_exit, iv->second, 1e-9);
            }
            for (int k : oracle_set) EXPECT_TRUE(fast_set.count(k)) << k;
            total_hits += static_cast<int>(fast.size());
        }
    }
    EXPECT_GT(total_hits, 1000);
}

TEST(Intersect, SortedClippedUnique)
{
    std::mt19937_64 rng(6);
    const PrimitiveSet s = testing::random_scene(rng, {.count = 64, .resolution = 1});
    const Bvh bvh = Bvh::build(s);
    for (int r = 0; r < 2000; ++r) {
        const Ray ray = random_ray(rng);
        const RayHitList hits = intersect(ray, s, bvh);
        std::set<int> ids;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_LT(hits[i].t_enter, hits[i].t_exit);
            EXPECT_GE(hits[i].t_enter, ray.t_min);
            EXPECT_LE(hits[i].t_exit, ray.t_max);
            if (i) EXPECT_LE(hits[i - 1].t_enter, hits[i].t_enter);
            EXPECT_TRUE(ids.insert(hits[i].primitive).second);
        }
    }
}

TEST(Intersect, RotatingBoxAndRayTogetherIsInvariant)
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        PrimitiveSet s = testing::random_scene(rng, {.count = 1, .resolution = 1});
        s.primitives[0].position = {};
        const Ray ray = random_ray(rng);
        const auto before = intersect_primitive(ray, s.primitives[0], 0);
        const Rotation q = testing::random_rotation(rng);
        s.primitives[0].rotation = q * s.primitives[0].rotation;
        const Ray turned{q.rotate(ray.origin), q.rotate(ray.direction), ray.t_min, ray.t_max};
        const auto after = intersect_primitive(turned, s.primitives[0], 0);
        ASSERT_EQ(before.has_value(), after.has_value());
        if (before) {
            EXPECT_NEAR(before->t_enter, after->t_enter, 1e-9);
            EXPECT_NEAR(before->t_exit, after->t_exit, 1e-9);
        }
    }
}

TEST(Aabb, SlabAndContainment)
{
    Aabb b;
    b.expand({-1, -1, -1});
    b.expand({1, 2, 3});
    EXPECT_TRUE(b.contains(Vec3{0, 0, 0}));
    EXPECT_FALSE(b.contains(Vec3{0, 2.5, 0}));
    const Vec3 inv{1.0, 1.0 / 1e-300, 1.0 / 1e-300};
    EXPECT_TRUE(b.intersect({-5, 0, 0}, inv, 0.0, 10.0));
    EXPECT_FALSE(b.intersect({-5, 0, 0}, inv, 0.0, 3.0));
    EXPECT_EQ(b.center(), (Vec3{0, 0.5, 1}));
}

}  // namespace
}  // namespace primvol
