// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "primvol/accel.h"
#include "primvol/error.h"
#include "primvol/generator.h"
#include "primvol/train.h"

namespace primvol {
namespace {

GeneratorConfig small_config()
{
    GeneratorConfig c;
    c.latent_dim = 3;
    c.n_prim = 4;
    c.resolution = 2;
    c.geo_hidden = {5};
    c.alpha_hidden = {4};
    c.rgb_hidden = {4};
    c.seed = 7;
    return c;
}

AnchorSet small_anchors()
{
    AnchorSet a = lattice_anchors(2, 0.5, 0.0);
    a.positions.resize(4);
    a.rotations.resize(4);
    a.inherited.resize(4);
    return a;
}

// Randomizes every parameter, including the zero-initialized geo output layer.
void scramble(Generator& g, std::uint64_t seed, double scale = 0.3)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    for (double& p : g.params()) p += n(rng);
}

const std::vector<double> kW{0.3, -0.5, 0.8};
const Vec3 kView = normalize(Vec3{0.2, -0.1, 1.0});

TEST(Generator, OutputShapes)
{
    GeneratorConfig c = small_config();
    const Generator g(c);
    EXPECT_EQ(g.geo().shape().output, 9 * c.n_prim);
    EXPECT_EQ(g.alpha().shape().output, c.n_prim * 8);
    EXPECT_EQ(g.rgb().shape().output, 3 * c.n_prim * 8);
    EXPECT_EQ(g.rgb().shape().input, c.latent_dim + 3);
    EXPECT_EQ(geo_forward(g, kW).size(), 4u);
    const auto alpha = alpha_forward(g, kW);
    ASSERT_EQ(alpha.size(), 4u);
    EXPECT_EQ(alpha[0].size(), 8u);
    const auto rgb = rgb_forward(g, kW, kView);
    EXPECT_EQ(rgb[3].size(), 24u);
    EXPECT_THROW(geo_forward(g, std::vector<double>{1.0}), ArgumentError);
    EXPECT_THROW(rgb_forward(g, kW, Vec3{1.0, 1.0, 0.0}), ArgumentError);
}

TEST(Generator, DefaultsFollowPublishedShapes)
{
    const GeneratorConfig c;
    EXPECT_EQ(c.latent_dim, 512);
    EXPECT_EQ(c.n_prim, 1024);
    EXPECT_EQ(c.resolution, 32);
}

TEST(Generator, ZeroGeoLayerPlacesPrimitivesAtAnchors)
{
    const Generator g(small_config());
    const AnchorSet anchors = small_anchors();
    for (const Vec3& d : geo_forward(g, kW).translation) EXPECT_EQ(d, Vec3{});
    const GeneratedScene s = generate_scene(g, anchors, kW, kView);
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        EXPECT_EQ(s.scene().primitives[k].position, anchors.positions[k]);
        EXPECT_EQ(s.scene().primitives[k].scale, anchors.base_scale);
    }
}

TEST(Generator, InitialDensityIsAlphaInit)
{
    GeneratorConfig c = small_config();
    c.alpha_init = 1.7;
    Generator g(c);
    // Zero the alpha output weights so only the bias remains.
    const Mlp& a = g.alpha();
    const std::size_t last_weights = a.offset() + a.param_count() - 8 * 4 - 8 * 4 * 4;
    std::fill(g.params().begin() + last_weights, g.params().begin() + last_weights + 8 * 4 * 4, 0.0);
    for (const auto& grid : alpha_forward(g, kW))
        for (double v : grid) EXPECT_NEAR(v, 1.7, 1e-12);
}

TEST(Generator, OutputRangesOnRandomInputs)
{
    Generator g(small_config());
    scramble(g, 1, 3.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w(3);
        for (double& v : w) v = n(rng);
        const DeltaSet d = geo_forward(g, w);
        for (std::size_t k = 0; k < d.size(); ++k) {
            EXPECT_LT(norm(d.rotation[k]), std::numbers::pi);
            EXPECT_LE(max_abs(d.translation[k]), g.config().range_t);
        }
        for (const auto& grid : alpha_forward(g, w))
            for (double v : grid) EXPECT_GE(v, 0.0);
        for (const auto& grid : rgb_forward(g, w, kView))
            for (double v : grid) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        const GeneratedScene s = generate_scene(g, small_anchors(), w, kView);
        for (const Primitive& p : s.scene().primitives)
            for (int a = 0; a < 3; ++a) EXPECT_GE(p.scale[a], kMinScale);
    }
}

TEST(Generator, PureFunctionOfInputs)
{
    Generator g(small_config());
    scramble(g, 3);
    const GeneratedScene a = generate_scene(g, small_anchors(), kW, kView);
    const GeneratedScene b = generate_scene(g, small_anchors(), kW, kView);
    EXPECT_EQ(a.scene(), b.scene());
    EXPECT_EQ(Generator(small_config()), Generator(small_config()));
}

TEST(Generator, ViewDirectionConditionsColor)
{
    Generator g(small_config());
    scramble(g, 4);
    const auto a = rgb_forward(g, kW, kView);
    const auto b = rgb_forward(g, kW, normalize(Vec3{-1.0, 0.3, 0.2}));
    double diff = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].size(); ++i) diff = std::max(diff, std::abs(a[k][i] - b[k][i]));
    EXPECT_GT(diff, 0.0);
}

TEST(Generator, GeoDeltasRespectLipschitzBound)
{
    Generator g(small_config());
    scramble(g, 5);
    const double bound = geo_lipschitz_bound(g);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(3), b(3);
        double dw = 0.0;
        for (int i = 0; i < 3; ++i) {
            a[i] = n(rng);
            b[i] = a[i] + 1e-3 * n(rng) / std::sqrt(3.0);
            dw += (a[i] - b[i]) * (a[i] - b[i]);
        }
        const DeltaSet da = geo_forward(g, a), db = geo_forward(g, b);
        double dd = 0.0;
        for (std::size_t k = 0; k < da.size(); ++k) {
            dd += dot(da.translation[k] - db.translation[k], da.translation[k] - db.translation[k]);
            dd += dot(da.rotation[k] - db.rotation[k], da.rotation[k] - db.rotation[k]);
            dd += dot(da.scale[k] - db.scale[k], da.scale[k] - db.scale[k]);
        }
        EXPECT_LE(std::sqrt(dd), bound * std::sqrt(dw) * (1 + 1e-9));
    }
}

// L = sum of fixed coefficients times every scene quantity; rotations enter through
// log(R0^-1 R) so their coefficient is the right-tangent gradient.
struct LinearProbe {
    SceneGrads coeff;
    std::vector<Rotation> base;

    double operator()(const PrimitiveSet& s) const
    {
        double l = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const Primitive& p = s.primitives[k];
            const PrimitiveGrads& c = coeff.primitives[k];
            l += dot(c.position, p.position) + dot(c.scale, p.scale);
            l += dot(c.rotation, (base[k].inverse() * p.rotation).log());
            for (std::size_t i = 0; i < p.payload.alpha.size(); ++i) l += c.alpha[i] * p.payload.alpha[i];
            for (std::size_t i = 0; i < p.payload.rgb.size(); ++i) l += c.rgb[i] * p.payload.rgb[i];
        }
        return l;
    }
};

TEST(Generator, BackwardMatchesDifferences)
{
    Generator g(small_config());
    scramble(g, 8);
    const AnchorSet anchors = small_anchors();
    const GeneratedScene s = generate_scene(g, anchors, kW, kView);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LinearProbe probe{SceneGrads::zeros_like(s.scene()), {}};
    for (std::size_t k = 0; k < s.scene().size(); ++k) {
        PrimitiveGrads& c = probe.coeff.primitives[k];
        c.position = {u(rng), u(rng), u(rng)};
        c.rotation = {u(rng), u(rng), u(rng)};
        c.scale = {u(rng), u(rng), u(rng)};
        for (double& v : c.alpha) v = u(rng);
        for (double& v : c.rgb) v = u(rng);
        probe.base.push_back(s.scene().primitives[k].rotation);
    }
    const GeneratorGrads grads = generator_backward(g, s, probe.coeff);

    // Fourth-order central differences keep round-off below the tolerance on small entries.
    const double h = 1e-4;
    const auto stencil = [&](const auto& eval) {
        return (8.0 * (eval(h) - eval(-h)) - (eval(2 * h) - eval(-2 * h))) / (12.0 * h);
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < g.param_count(); ++i) {
        const double num = stencil([&](double d) {
            Generator gd = g;
            gd.params()[i] += d;
            return probe(generate_scene(gd, anchors, kW, kView).scene());
        });
        worst = std::max(worst, relative_error(grads.params[i], num));
    }
    EXPECT_LT(worst, 1e-5);
    for (int i = 0; i < 3; ++i) {
        const double num = stencil([&](double d) {
            std::vector<double> w = kW;
            w[i] += d;
            return probe(generate_scene(g, anchors, w, kView).scene());
        });
        EXPECT_LT(relative_error(grads.latent[i], num), 1e-5);
    }
}

TEST(Generator, ClampedScaleAxisPassesNoGradient)
{
    GeneratorConfig c = small_config();
    c.range_s = 1.0;
    Generator g(c);
    AnchorSet anchors = small_anchors();
    anchors.base_scale = {0.1, 0.1, 0.1};
    // Large negative scale bias drives every composed scale to the floor.
    const Mlp& geo = g.geo();
    const std::size_t bias = geo.offset() + geo.param_count() - 9 * 4;
    for (int k = 0; k < 4; ++k)
        for (int a = 0; a < 3; ++a) g.params()[bias + 9 * k + 6 + a] = -5.0;
    const GeneratedScene s = generate_scene(g, anchors, kW, kView);
    ASSERT_TRUE(s.composition.any_scale_clamped);
    SceneGrads sg = SceneGrads::zeros_like(s.scene());
    for (PrimitiveGrads& p : sg.primitives) p.scale = {1.0, 1.0, 1.0};
    const GeneratorGrads grads = generator_backward(g, s, sg);
    for (double v : grads.params) EXPECT_EQ(v, 0.0);
}

TEST(Generator, FullSizeShapesRender)
{
    GeneratorConfig c;
    c.latent_dim = 8;
    c.geo_hidden = {4};
    c.alpha_hidden = {1};
    c.rgb_hidden = {1};
    const Generator g(c);
    const GuideMesh mesh = make_uv_sphere(1.0, 16, 8);
    const AnchorSet anchors = anchor_primitives(mesh, 32);
    ASSERT_EQ(anchors.size(), 1024u);
    const std::vector<double> w(8, 0.1);
    const GeneratedScene s = generate_scene(g, anchors, w, kView);
    ASSERT_EQ(s.scene().size(), 1024u);
    EXPECT_EQ(s.scene().primitives[0].payload.alpha.size(), 32u * 32 * 32);
    const Camera cam = look_at({0.0, 0.0, -3.5}, {}, {0.0, -1.0, 0.0}, 20.0, 16, 16);
    RenderOptions opts;
    opts.step = 0.05;
    const RenderResult r = render(cam, s.scene(), Bvh::build(s.scene()), opts);
    EXPECT_TRUE(r.image.all_finite());
}

class CheckpointTest : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "primvol_ckpt_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(CheckpointTest, RoundTripIsLossless)
{
    GeneratorCheckpoint c;
    c.generator = Generator(small_config());
    scramble(c.generator, 10);
    c.step = 123;
    c.adam_m.assign(c.generator.param_count(), 0.25);
    c.adam_v.assign(c.generator.param_count(), 1.0 / 3.0);
    c.adam_steps = 99;
    c.extra["note"] = "x";
    save_checkpoint(c, dir / "g.ckpt");
    const GeneratorCheckpoint r = load_checkpoint(dir / "g.ckpt");
    EXPECT_EQ(r.generator, c.generator);
    EXPECT_EQ(r.step, 123);
    EXPECT_EQ(r.adam_m, c.adam_m);
    EXPECT_EQ(r.adam_v, c.adam_v);
    EXPECT_EQ(r.adam_steps, 99);
    EXPECT_EQ(r.extra["note"], "x");
    EXPECT_FALSE(std::filesystem::exists(dir / "g.ckpt.tmp"));
}

TEST_F(CheckpointTest, TruncatedOrMissingFileThrows)
{
    GeneratorCheckpoint c;
    c.generator = Generator(small_config());
    save_checkpoint(c, dir / "g.ckpt");
    const auto size = std::filesystem::file_size(dir / "g.ckpt");
    std::filesystem::resize_file(dir / "g.ckpt", size - 16);
    EXPECT_THROW(load_checkpoint(dir / "g.ckpt"), IoError);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST_F(CheckpointTest, ConfigRoundTripsThroughJson)
{
    const GeneratorConfig c = small_config();
    EXPECT_EQ(GeneratorConfig::from_json(c.to_json()), c);
}

}  // namespace
}  // namespace primvol
