// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "primvol/camera.h"
#include "primvol/scene.h"

namespace primvol {

struct Aabb {
    Vec3 lo = Vec3::splat(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::splat(-std::numeric_limits<double>::infinity());

    void expand(const Vec3& p);
    void expand(const Aabb& b);
    bool contains(const Vec3& p) const;
    bool contains(const Aabb& b) const;
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    /// Slab test; returns the overlap of the ray with the box within [t0, t1].
    bool intersect(const Vec3& origin, const Vec3& inv_dir, double t0, double t1) const;

    bool operator==(const Aabb&) const = default;
};

/// World-space bounds of a primitive's oriented box (union of its 8 corners).
Aabb primitive_bounds(const Primitive& prim);

struct BvhNode {
    Aabb bounds;
    int left{-1};   // child node indices for interior nodes
    int right{-1};
    int first{0};   // range into Bvh::order() for leaves
    int count{0};   // > 0 marks a leaf

    bool is_leaf() const { return count > 0; }
};

/// Median-split bounding volume hierarchy over the primitives' world-space boxes.
class Bvh {
public:
    static constexpr int kMaxLeafSize = 2;

    Bvh() = default;
    static Bvh build(const PrimitiveSet& scene);

    const std::vector<BvhNode>& nodes() const { return nodes_; }
    /// Primitive indices in leaf order; each index appears exactly once.
    const std::vector<int>& order() const { return order_; }
    const std::vector<Aabb>& primitive_bounds() const { return prim_bounds_; }
    std::size_t primitive_count() const { return prim_bounds_.size(); }

private:
    int build_node(int first, int count, const std::vector<Vec3>& centroids);

    std::vector<BvhNode> nodes_;
    std::vector<int> order_;
    std::vector<Aabb> prim_bounds_;
};

struct Hit {
    int primitive{0};
    double t_enter{0.0};
    double t_exit{0.0};

    bool operator==(const Hit&) const = default;
};

/// Hits sorted by (t_enter, primitive), each clipped to the ray's [t_min, t_max].
using RayHitList = std::vector<Hit>;

/// Oriented slab test in the primitive frame. Returns the clipped interval on a hit
/// of positive length.
std::optional<Hit> intersect_primitive(const Ray& ray, const Primitive& prim, int index);

RayHitList intersect(const Ray& ray, const PrimitiveSet& scene, const Bvh& bvh);
/// Reference path testing every primitive.
RayHitList intersect_brute_force(const Ray& ray, const PrimitiveSet& scene);

}  // namespace primvol
