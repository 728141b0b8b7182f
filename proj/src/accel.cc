// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/accel.h"

#include <algorithm>
#include <numeric>

namespace primvol {

namespace {

// Relative padding keeping node tests conservative against rounding in the slab tests.
constexpr double kBoundsPad = 1e-9;

void sort_hits(RayHitList& hits)
{
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return a.t_enter != b.t_enter ? a.t_enter < b.t_enter : a.primitive < b.primitive;
    });
}

}  // namespace

void Aabb::expand(const Vec3& p)
{
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
    }
}

void Aabb::expand(const Aabb& b)
{
    expand(b.lo);
    expand(b.hi);
}

bool Aabb::contains(const Vec3& p) const
{
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

bool Aabb::contains(const Aabb& b) const { return contains(b.lo) && contains(b.hi); }

bool Aabb::intersect(const Vec3& origin, const Vec3& inv_dir, double t0, double t1) const
{
    for (int a = 0; a < 3; ++a) {
        double tn = (lo[a] - origin[a]) * inv_dir[a];
        double tf = (hi[a] - origin[a]) * inv_dir[a];
        if (tn > tf) std::swap(tn, tf);
        // NaN from 0 * inf (origin on a slab plane, parallel ray) must not reject.
        if (tn == tn) t0 = std::max(t0, tn);
        if (tf == tf) t1 = std::min(t1, tf);
        if (t0 > t1) return false;
    }
    return true;
}

Aabb primitive_bounds(const Primitive& prim)
{
    Aabb b;
    for (const Vec3& c : prim.corners()) b.expand(c);
    const double pad = kBoundsPad * (1.0 + max_abs(b.extent()) + max_abs(b.center()));
    b.lo -= Vec3::splat(pad);
    b.hi += Vec3::splat(pad);
    return b;
}

Bvh Bvh::build(const PrimitiveSet& scene)
{
    Bvh bvh;
    const int n = static_cast<int>(scene.size());
    bvh.prim_bounds_.reserve(n);
    std::vector<Vec3> centroids;
    centroids.reserve(n);
    for (const Primitive& p : scene.primitives) {
        bvh.prim_bounds_.push_back(primvol::primitive_bounds(p));
        centroids.push_back(bvh.prim_bounds_.back().center());
    }
    bvh.order_.resize(n);
    std::iota(bvh.order_.begin(), bvh.order_.end(), 0);
    if (n > 0) {
        bvh.nodes_.reserve(2 * n);
        bvh.build_node(0, n, centroids);
    }
    return bvh;
}

int Bvh::build_node(int first, int count, const std::vector<Vec3>& centroids)
{
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb bounds;
    Aabb centroid_bounds;
    for (int i = first; i < first + count; ++i) {
        bounds.expand(prim_bounds_[order_[i]]);
        centroid_bounds.expand(centroids[order_[i]]);
    }
    nodes_[index].bounds = bounds;
    if (count <= kMaxLeafSize) {
        nodes_[index].first = first;
        nodes_[index].count = count;
        return index;
    }

    const Vec3 ext = centroid_bounds.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca != cb ? ca < cb : a < b;
                     });
    const int left = build_node(first, mid - first, centroids);
    const int right = build_node(mid, first + count - mid, centroids);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

std::optional<Hit> intersect_primitive(const Ray& ray, const Primitive& prim, int index)
{
    const Vec3 o = prim.world_to_local(ray.origin);
    const Vec3 d = div(prim.rotation.inverse_rotate(ray.direction), prim.scale);
    double t0 = ray.t_min, t1 = ray.t_max;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < -1.0 || o[a] > 1.0) return std::nullopt;
            continue;
        }
        double tn = (-1.0 - o[a]) / d[a];
        double tf = (1.0 - o[a]) / d[a];
        if (tn > tf) std::swap(tn, tf);
        t0 = std::max(t0, tn);
        t1 = std::min(t1, tf);
    }
    if (!(t0 < t1)) return std::nullopt;
    return Hit{index, t0, t1};
}

RayHitList intersect(const Ray& ray, const PrimitiveSet& scene, const Bvh& bvh)
{
    RayHitList hits;
    const auto& nodes = bvh.nodes();
    if (nodes.empty()) return hits;
    const Vec3 inv_dir{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const BvhNode& node = nodes[stack[--top]];
        if (!node.bounds.intersect(ray.origin, inv_dir, ray.t_min, ray.t_max)) continue;
        if (node.is_leaf()) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const int k = bvh.order()[i];
                if (!bvh.primitive_bounds()[k].intersect(ray.origin, inv_dir, ray.t_min, ray.t_max))
                    continue;
                if (auto h = intersect_primitive(ray, scene.primitives[k], k)) hits.push_back(*h);
            }
        } else {
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }
    sort_hits(hits);
    return hits;
}

RayHitList intersect_brute_force(const Ray& ray, const PrimitiveSet& scene)
{
    RayHitList hits;
    for (std::size_t k = 0; k < scene.size(); ++k)
        if (auto h = intersect_primitive(ray, scene.primitives[k], static_cast<int>(k))) hits.push_back(*h);
    sort_hits(hits);
    return hits;
}

}  // namespace primvol
