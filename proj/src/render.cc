// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/render.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <string>

#include "primvol/error.h"
#include "primvol/parallel.h"

namespace primvol {

void RenderOptions::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step)) throw ArgumentError("render step must be positive");
    if (max_samples < 1) throw ArgumentError("max_samples must be >= 1");
    if (!(near >= 0.0 && near < far) || !std::isfinite(far))
        throw ArgumentError("render range needs 0 <= near < far");
    if (!(fade.exponent >= 1.0) || !std::isfinite(fade.exponent))
        throw ArgumentError("fade exponent must be finite and >= 1");
    if (tile_size < 1) throw ArgumentError("tile size must be >= 1");
    if (background && !is_finite(*background)) throw ArgumentError("background must be finite");
}

SampleGrid SampleGrid::for_ray(const Ray& ray, const RenderOptions& opts)
{
    SampleGrid g;
    g.t_min = ray.t_min;
    g.t_max = ray.t_max;
    g.step = opts.step;
    const double span = ray.t_max - ray.t_min;
    if (!(span > 0.0)) return g;
    double n = std::ceil(span / opts.step);
    if (n >= 1.0 && g.t_min + (n - 1.0) * opts.step >= g.t_max) n -= 1.0;
    n = std::max(n, 1.0);
    g.count = static_cast<int>(std::min<double>(n, opts.max_samples));
    g.truncated = n > opts.max_samples;
    return g;
}

double SampleGrid::length(int i) const
{
    if (!truncated && i == count - 1) return t_max - start(i);
    return step;
}

PreparedScene::PreparedScene(const PrimitiveSet& scene) : scene_(&scene)
{
    frames_.reserve(scene.size());
    for (const Primitive& p : scene.primitives) {
        const Mat3 r = p.rotation.matrix();
        Frame f;
        for (int a = 0; a < 3; ++a) f.rows[a] = r.column(a) / p.scale[a];
        f.position = p.position;
        frames_.push_back(f);
    }
}

bool PreparedScene::evaluate(int k, const Vec3& x, const FadeParams& fade_params,
                             PrimitiveContribution& out) const
{
    const Frame& f = frames_[k];
    const Vec3 d = x - f.position;
    const double lx = dot(f.rows[0], d);
    if (lx < -1.0 || lx > 1.0) return false;
    const double ly = dot(f.rows[1], d);
    if (ly < -1.0 || ly > 1.0) return false;
    const double lz = dot(f.rows[2], d);
    if (lz < -1.0 || lz > 1.0) return false;
    const Payload& payload = scene_->primitives[k].payload;
    out.local = {lx, ly, lz};
    out.tri = trilinear_coords(payload.resolution, out.local);
    const PayloadSample s = sample_payload(payload, out.tri);
    out.alpha_raw = s.alpha;
    out.rgb = s.rgb;
    out.fade = fade_params.enabled ? fade(out.local, fade_params.exponent) : 1.0;
    return true;
}

FieldSample PreparedScene::field(const Vec3& x, const FadeParams& fade_params) const
{
    FieldSample f;
    PrimitiveContribution c;
    for (std::size_t k = 0; k < frames_.size(); ++k) {
        if (!evaluate(static_cast<int>(k), x, fade_params, c)) continue;
        const double a = c.alpha();
        f.alpha += a;
        f.premultiplied += c.rgb * a;
    }
    return f;
}

std::uint64_t scene_fingerprint(const PrimitiveSet& scene)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    auto mix_double = [&](double v) { mix_bytes(&v, sizeof v); };
    const std::uint64_t n = scene.size();
    mix_bytes(&n, sizeof n);
    for (const Primitive& p : scene.primitives) {
        for (int a = 0; a < 3; ++a) {
            mix_double(p.position[a]);
            mix_double(p.scale[a]);
        }
        mix_double(p.rotation.w());
        mix_double(p.rotation.x());
        mix_double(p.rotation.y());
        mix_double(p.rotation.z());
        mix_bytes(&p.payload.resolution, sizeof p.payload.resolution);
        mix_bytes(p.payload.rgb.data(), p.payload.rgb.size() * sizeof(double));
        mix_bytes(p.payload.alpha.data(), p.payload.alpha.size() * sizeof(double));
    }
    return h;
}

Vec3 palette_color(std::uint32_t index)
{
    // Odd multipliers and right xorshifts are bijections on 24-bit words.
    constexpr std::uint32_t kMask = 0xFFFFFFu;
    std::uint32_t x = index & kMask;
    x = (x * 0x9E3779u + 0x5A3C1Du) & kMask;
    x ^= x >> 12;
    x = (x * 0xC2B2AFu) & kMask;
    x ^= x >> 11;
    x = (x * 0x27D4EBu) & kMask;
    x ^= x >> 13;
    auto channel = [](std::uint32_t byte) { return 0.15 + 0.85 * byte / 255.0; };
    return {channel((x >> 16) & 0xFFu), channel((x >> 8) & 0xFFu), channel(x & 0xFFu)};
}

namespace {

enum class ColorMode { Payload, Palette };

struct Accumulator {
    Vec3 color;
    double coverage{0.0};
    bool saturated{false};

    /// Clamped-linear update; returns the coverage increment.
    void add(double sigma, const Vec3& premult, double dt, bool& sample_saturated)
    {
        sample_saturated = false;
        const double a = sigma * dt;
        if (!(a > 0.0)) return;
        const Vec3 emitted = premult / sigma;
        const double sum = coverage + a;
        sample_saturated = sum >= 1.0;
        const double next = sample_saturated ? 1.0 : sum;
        const double delta = next - coverage;
        assert(delta >= 0.0);
        color += emitted * delta;
        coverage = next;
        saturated = sample_saturated;
    }
};

template <ColorMode Mode>
struct SampleEvaluator {
    const PreparedScene& scene;
    const FadeParams& fade;
    RayTape* tape;

    // Sums contributions at x over `prims` (ascending indices). Returns false when no
    // primitive contains x.
    template <class Range>
    bool evaluate(const Vec3& x, const Range& prims, double& sigma, Vec3& premult, std::size_t& first,
                  std::size_t& count) const
    {
        sigma = 0.0;
        premult = {};
        bool any = false;
        first = tape ? tape->entries.size() : 0;
        count = 0;
        PrimitiveContribution c;
        for (int k : prims) {
            if (!scene.evaluate(k, x, fade, c)) continue;
            any = true;
            const double a = c.alpha();
            sigma += a;
            if constexpr (Mode == ColorMode::Palette) {
                premult += palette_color(static_cast<std::uint32_t>(k)) * a;
            } else {
                premult += c.rgb * a;
            }
            if (tape) {
                TapeEntry e;
                e.primitive = k;
                e.local = c.local;
                e.fade = c.fade;
                tape->entries.push_back(e);
                ++count;
            }
        }
        return any;
    }

    // Applies one sample to the accumulator, recording it when taping.
    bool step(Accumulator& acc, const SampleGrid& grid, int i, const Ray& ray,
              const std::vector<int>& prims) const
    {
        double sigma;
        Vec3 premult;
        std::size_t first, count;
        if (!evaluate(ray.at(grid.midpoint(i)), prims, sigma, premult, first, count)) return false;
        const double dt = grid.length(i);
        const double before = acc.coverage;
        bool sat = false;
        acc.add(sigma, premult, dt, sat);
        if (tape) {
            TapeSample s;
            s.dt = dt;
            s.coverage_before = before;
            s.sigma = sigma;
            s.premultiplied = premult;
            s.saturated = sat;
            s.first_entry = static_cast<std::uint32_t>(first);
            s.entry_count = static_cast<std::uint32_t>(count);
            tape->samples.push_back(s);
        }
        return acc.saturated;
    }
};

struct Span {
    int first;
    int last;
    int primitive;
};

template <ColorMode Mode>
RayResult march_hits(const Ray& ray, const RayHitList& hits, const PreparedScene& scene,
                     const RenderOptions& opts, RayTape* tape)
{
    Accumulator acc;
    const SampleGrid grid = SampleGrid::for_ray(ray, opts);
    if (grid.count == 0 || hits.empty()) return {};

    // Grid index ranges whose midpoints may fall inside each hit interval, widened by
    // one step; containment itself is decided per sample.
    std::vector<Span> spans;
    spans.reserve(hits.size());
    for (const Hit& h : hits) {
        const double lo = std::floor((h.t_enter - grid.t_min) / grid.step - 0.5) - 1.0;
        const double hi = std::ceil((h.t_exit - grid.t_min) / grid.step - 0.5) + 1.0;
        const int first = static_cast<int>(std::max(lo, 0.0));
        const int last = static_cast<int>(std::min(hi, static_cast<double>(grid.count - 1)));
        if (first <= last) spans.push_back({first, last, h.primitive});
    }
    std::stable_sort(spans.begin(), spans.end(),
                     [](const Span& a, const Span& b) { return a.first < b.first; });

    const SampleEvaluator<Mode> eval{scene, opts.fade, tape};
    std::vector<int> active;  // ascending primitive indices
    std::vector<int> active_last;
    std::size_t next = 0;
    int i = spans.empty() ? grid.count : spans.front().first;
    while (i < grid.count) {
        while (next < spans.size() && spans[next].first <= i) {
            const Span& s = spans[next++];
            const auto pos = std::lower_bound(active.begin(), active.end(), s.primitive);
            active_last.insert(active_last.begin() + (pos - active.begin()), s.last);
            active.insert(pos, s.primitive);
        }
        for (std::size_t j = active.size(); j-- > 0;) {
            if (active_last[j] < i) {
                active.erase(active.begin() + j);
                active_last.erase(active_last.begin() + j);
            }
        }
        if (active.empty()) {
            if (next >= spans.size()) break;
            i = spans[next].first;
            continue;
        }
        if (eval.step(acc, grid, i, ray, active)) break;
        ++i;
    }
    return {acc.color, acc.coverage};
}

Vec3 background_of(const PrimitiveSet& scene, const RenderOptions& opts)
{
    return opts.background.value_or(scene.background);
}

struct TileJob {
    int x0, y0, x1, y1;
};

std::vector<TileJob> make_tiles(int width, int height, int tile)
{
    std::vector<TileJob> tiles;
    for (int y = 0; y < height; y += tile)
        for (int x = 0; x < width; x += tile)
            tiles.push_back({x, y, std::min(x + tile, width), std::min(y + tile, height)});
    return tiles;
}

struct TileTape {
    RayTape data;
    std::vector<std::pair<std::size_t, TapePixel>> pixels;  // (pixel index, local record)
};

template <class RayFn>
RenderResult render_tiles(const Camera& camera, const PrimitiveSet& scene, const RenderOptions& opts,
                          bool record, RayFn&& ray_fn)
{
    opts.validate();
    camera.validate();
    const Vec3 bg = background_of(scene, opts);
    RenderResult out;
    out.image = ImageBuffer(camera.width, camera.height, 3);
    out.coverage = ImageBuffer(camera.width, camera.height, 1);
    const std::vector<TileJob> tiles = make_tiles(camera.width, camera.height, opts.tile_size);
    // A single worker visits tiles in order and can write one tape directly.
    const bool serial = resolve_threads(opts.threads) == 1;
    std::vector<TileTape> tile_tapes(record ? (serial ? 1 : tiles.size()) : 0);

    parallel_for(tiles.size(), opts.threads, [&](std::size_t t) {
        const TileJob& job = tiles[t];
        TileTape* tt = record ? &tile_tapes[serial ? 0 : t] : nullptr;
        for (int y = job.y0; y < job.y1; ++y) {
            for (int x = job.x0; x < job.x1; ++x) {
                const Ray ray = camera_ray(camera, x, y, opts.near, opts.far);
                const std::size_t first = tt ? tt->data.samples.size() : 0;
                const RayResult r = ray_fn(ray, tt ? &tt->data : nullptr);
                const std::size_t pixel = static_cast<std::size_t>(y) * camera.width + x;
                out.image.set_rgb(pixel, r.color + bg * (1.0 - r.coverage));
                out.coverage.data()[pixel] = r.coverage;
                if (tt) {
                    TapePixel p;
                    p.first_sample = static_cast<std::uint32_t>(first);
                    p.sample_count = static_cast<std::uint32_t>(tt->data.samples.size() - first);
                    p.coverage = r.coverage;
                    tt->pixels.emplace_back(pixel, p);
                }
            }
        }
    });

    if (record) {
        RenderTape tape;
        tape.width = camera.width;
        tape.height = camera.height;
        tape.background = bg;
        tape.fade = opts.fade;
        tape.fingerprint = scene_fingerprint(scene);
        tape.pixels.resize(out.image.pixel_count());
        std::size_t n_samples = 0, n_entries = 0;
        for (const TileTape& tt : tile_tapes) {
            n_samples += tt.data.samples.size();
            n_entries += tt.data.entries.size();
        }
        if (n_entries > 0xFFFFFFFFull || n_samples > 0xFFFFFFFFull)
            throw ArgumentError("render tape exceeds 2^32 records; reduce resolution or step count");
        if (tile_tapes.size() == 1) {
            tape.samples = std::move(tile_tapes[0].data.samples);
            tape.entries = std::move(tile_tapes[0].data.entries);
            for (auto [pixel, rec] : tile_tapes[0].pixels) tape.pixels[pixel] = rec;
            tile_tapes.clear();
        }
        tape.samples.reserve(n_samples);
        tape.entries.reserve(n_entries);
        for (TileTape& tt : tile_tapes) {
            const auto sample_offset = static_cast<std::uint32_t>(tape.samples.size());
            const auto entry_offset = static_cast<std::uint32_t>(tape.entries.size());
            for (TapeSample s : tt.data.samples) {
                s.first_entry += entry_offset;
                tape.samples.push_back(s);
            }
            tape.entries.insert(tape.entries.end(), tt.data.entries.begin(), tt.data.entries.end());
            for (auto [pixel, rec] : tt.pixels) {
                rec.first_sample += sample_offset;
                tape.pixels[pixel] = rec;
            }
            tt = TileTape{};
        }
        out.tape = std::move(tape);
    }
    return out;
}

}  // namespace

RayResult integrate_ray(const Ray& ray, const RayHitList& hits, const PreparedScene& scene,
                        const RenderOptions& opts, RayTape* tape)
{
    return march_hits<ColorMode::Payload>(ray, hits, scene, opts, tape);
}

RayResult integrate_ray(const Ray& ray, const RayHitList& hits, const PrimitiveSet& scene,
                        const RenderOptions& opts)
{
    const PreparedScene prepared(scene);
    return integrate_ray(ray, hits, prepared, opts);
}

RayResult integrate_ray_dense(const Ray& ray, const PreparedScene& scene, const RenderOptions& opts)
{
    Accumulator acc;
    const SampleGrid grid = SampleGrid::for_ray(ray, opts);
    for (int i = 0; i < grid.count; ++i) {
        const FieldSample f = scene.field(ray.at(grid.midpoint(i)), opts.fade);
        bool sat = false;
        acc.add(f.alpha, f.premultiplied, grid.length(i), sat);
        if (acc.saturated) break;
    }
    return {acc.color, acc.coverage};
}

RenderResult render(const Camera& camera, const PrimitiveSet& scene, const Bvh& bvh,
                    const RenderOptions& opts)
{
    if (bvh.primitive_count() != scene.size())
        throw ArgumentError("BVH was built for " + std::to_string(bvh.primitive_count()) +
                            " primitives, scene has " + std::to_string(scene.size()));
    const PreparedScene prepared(scene);
    return render_tiles(camera, scene, opts, opts.record_tape, [&](const Ray& ray, RayTape* tape) {
        return integrate_ray(ray, intersect(ray, scene, bvh), prepared, opts, tape);
    });
}

RenderResult render_dense_oracle(const Camera& camera, const PrimitiveSet& scene,
                                 const RenderOptions& opts)
{
    const PreparedScene prepared(scene);
    return render_tiles(camera, scene, opts, false, [&](const Ray& ray, RayTape*) {
        return integrate_ray_dense(ray, prepared, opts);
    });
}

ImageBuffer render_primitive_overlay(const Camera& camera, const PrimitiveSet& scene, const Bvh& bvh,
                                     const RenderOptions& opts)
{
    const PreparedScene prepared(scene);
    RenderResult r = render_tiles(camera, scene, opts, false, [&](const Ray& ray, RayTape*) {
        return march_hits<ColorMode::Palette>(ray, intersect(ray, scene, bvh), prepared, opts, nullptr);
    });
    return std::move(r.image);
}

ImageBuffer replay_tape(const RenderTape& tape, const PrimitiveSet& scene)
{
    if (scene_fingerprint(scene) != tape.fingerprint)
        throw ArgumentError("render tape was recorded for a different scene");
    ImageBuffer image(tape.width, tape.height, 3);
    for (std::size_t p = 0; p < tape.pixels.size(); ++p) {
        const TapePixel& rec = tape.pixels[p];
        Accumulator acc;
        for (std::uint32_t i = 0; i < rec.sample_count; ++i) {
            const TapeSample& s = tape.samples[rec.first_sample + i];
            double sigma = 0.0;
            Vec3 premult;
            for (std::uint32_t j = 0; j < s.entry_count; ++j) {
                const TapeEntry& e = tape.entries[s.first_entry + j];
                const Payload& payload = scene.primitives[e.primitive].payload;
                const PayloadSample ps = sample_payload(payload, e.coords(payload.resolution));
                const double a = ps.alpha * e.fade;
                sigma += a;
                premult += ps.rgb * a;
            }
            bool sat = false;
            acc.add(sigma, premult, s.dt, sat);
        }
        image.set_rgb(p, acc.color + tape.background * (1.0 - acc.coverage));
    }
    return image;
}

}  // namespace primvol
