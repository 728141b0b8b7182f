// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "primvol/error.h"
#include "primvol/teacher.h"
#include "primvol/train.h"

namespace primvol {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "primvol_test_train" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

TeacherSpec small_teacher(int samples, int views, int res)
{
    TeacherSpec s;
    s.samples = samples;
    s.views = views;
    s.width = s.height = res;
    s.payload_resolution = 6;
    s.step = 0.04;
    return s;
}

RenderOptions train_render(const TeacherSpec& spec)
{
    RenderOptions o = teacher_render_options(spec);
    o.step = 0.04;
    return o;
}

GeneratorConfig tiny_generator(int n_prim)
{
    GeneratorConfig g;
    g.latent_dim = 2;
    g.n_prim = n_prim;
    g.resolution = 2;
    g.geo_hidden = {8};
    g.alpha_hidden = {8};
    g.rgb_hidden = {8};
    g.alpha_init = 0.5;
    return g;
}

TEST(Lattice, CountsAndPlacement)
{
    const AnchorSet a = lattice_anchors(3, 1.5, 0.2);
    ASSERT_EQ(a.size(), 27u);
    EXPECT_EQ(a.positions.front(), Vec3::splat(-1.0));
    EXPECT_EQ(a.positions.back(), Vec3::splat(1.0));
    EXPECT_DOUBLE_EQ(a.base_scale.x, 0.5 * 1.2);
    for (const Rotation& r : a.rotations) EXPECT_EQ(r, Rotation());
    EXPECT_THROW(lattice_anchors(0, 1.0), ArgumentError);
}

TEST(FadeSchedule, ConstantByDefaultAndAnnealed)
{
    const FadeSchedule constant;
    EXPECT_EQ(constant.exponent_at(0, 8.0, 1e-2), 8.0);
    EXPECT_EQ(constant.exponent_at(500, 8.0, 1e-2), 8.0);
    FadeSchedule anneal;
    anneal.anneal = true;
    EXPECT_EQ(anneal.exponent_at(0, 8.0, 1e-2), 2.0);
    EXPECT_NEAR(anneal.exponent_at(100, 8.0, 1e-2), 8.0 - 6.0 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(anneal.exponent_at(100000, 8.0, 1e-2), 8.0, 1e-12);
}

TEST(Fit, KnownSceneIsFixedPointAtStepZero)
{
    const TeacherSpec spec = small_teacher(1, 4, 12);
    FitConfig config;
    config.iters = 1;
    config.payload_resolution = 2;
    config.render = train_render(spec);
    const AnchorSet anchors = lattice_anchors(2, 0.6);
    const std::size_t n = anchors.size();
    const PrimitiveSet known =
        compose(anchors, DeltaSet::zeros(n), std::vector<Payload>(n, Payload(2, config.init_rgb, config.init_alpha)))
            .scene;

    MultiViewDataset ds;
    ds.root = scratch("fixed");
    for (int v = 0; v < spec.views; ++v) {
        ViewRecord r;
        r.camera = teacher_camera(spec, 0, v);
        r.view = v;
        r.image = "v" + std::to_string(v) + ".pfm";
        write_pfm(ds.root / r.image, render(r.camera, known, Bvh::build(known), config.render).image);
        ds.records.push_back(r);
    }
    const FitResult result = fit_scene(ds, anchors, config);
    ASSERT_EQ(result.log.size(), 1u);
    EXPECT_LT(result.log[0].rec, 1e-7);  // float32 storage of the targets
    EXPECT_LT(result.log[0].perc, 1e-7);
}

TEST(Fit, LossNonIncreasingOverWindows)
{
    const TeacherSpec spec = small_teacher(1, 6, 16);
    const MultiViewDataset ds = make_teacher(spec, scratch("windows"));
    FitConfig config;
    config.iters = 300;
    config.payload_resolution = 4;
    config.render = train_render(spec);
    const FitResult result = fit_scene(ds, lattice_anchors(2, 0.6), config);
    ASSERT_EQ(result.log.size(), 300u);
    double window[3] = {0, 0, 0};
    for (const LogEntry& e : result.log) window[e.step / 100] += e.total / 100.0;
    EXPECT_LE(window[1], 1.05 * window[0]);
    EXPECT_LE(window[2], 1.05 * window[1]);
    EXPECT_LT(window[2], window[0]);
    EXPECT_TRUE(result.scene.primitives.size() == 8u);
    EXPECT_NO_THROW(result.scene.validate());
}

TEST(Fit, ValidatesInputs)
{
    const TeacherSpec spec = small_teacher(1, 2, 8);
    const MultiViewDataset ds = make_teacher(spec, scratch("validate"));
    FitConfig config;
    config.render = train_render(spec);
    const MultiViewDataset one_view{ds.root, {ds.records[0]}};
    EXPECT_THROW(fit_scene(one_view, lattice_anchors(1, 0.5), config), ArgumentError);
    config.iters = -1;
    EXPECT_THROW(fit_scene(ds, lattice_anchors(1, 0.5), config), ArgumentError);
    EXPECT_EQ(FitConfig{}.lr, 1e-3);
    EXPECT_EQ(FitConfig{}.iters, 2000);
}

class DistillTest : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        spec_ = small_teacher(3, 2, 8);
        data_ = make_teacher(spec_, scratch("distill_data"));
    }
    DistillConfig config(int iters) const
    {
        DistillConfig c;
        c.iters = iters;
        c.batch = 2;
        c.render = train_render(spec_);
        c.checkpoint_every = 2;
        return c;
    }
    static inline TeacherSpec spec_;
    static inline MultiViewDataset data_;
    AnchorSet anchors_ = lattice_anchors(2, 0.6);
};

TEST_F(DistillTest, ResumeIsBitwiseIdentical)
{
    for (bool adversarial : {false, true}) {
        DistillConfig c = config(6);
        c.weights.adversarial = adversarial;
        const Generator init(tiny_generator(8));
        const DistillResult straight = distill(data_, anchors_, init, c);
        EXPECT_EQ(straight.steps_run, 6);

        c.checkpoint = scratch("resume") / "run.ckpt";
        const DistillResult first = distill(data_, anchors_, init, c, {}, 3);
        EXPECT_EQ(first.steps_run, 3);
        EXPECT_FALSE(first.resumed);
        const DistillResult second = distill(data_, anchors_, init, c);
        EXPECT_TRUE(second.resumed);
        EXPECT_EQ(second.steps_run, 3);
        EXPECT_EQ(second.generator.params(), straight.generator.params()) << adversarial;
        ASSERT_FALSE(second.log.empty());
        EXPECT_EQ(second.log.back().total, straight.log.back().total);
    }
}

TEST_F(DistillTest, IndependentOfThreadCount)
{
    DistillConfig c = config(3);
    c.render.threads = 1;
    const Generator init(tiny_generator(8));
    const DistillResult one = distill(data_, anchors_, init, c);
    c.render.threads = 8;
    const DistillResult eight = distill(data_, anchors_, init, c);
    EXPECT_EQ(one.generator.params(), eight.generator.params());
    EXPECT_NE(one.generator.params(), init.params());
}

TEST_F(DistillTest, RejectsMismatchedInputs)
{
    GeneratorConfig wrong = tiny_generator(8);
    wrong.latent_dim = 3;
    EXPECT_THROW(distill(data_, anchors_, Generator(wrong), config(1)), ArgumentError);
    MultiViewDataset no_latents = data_;
    for (ViewRecord& r : no_latents.records) r.latent.reset();
    EXPECT_THROW(distill(no_latents, anchors_, Generator(tiny_generator(8)), config(1)), ArgumentError);
    EXPECT_EQ(DistillConfig{}.lr, 1e-3);
    EXPECT_EQ(DistillConfig{}.critic_lr, 1e-5);
}

TEST_F(DistillTest, InvertKnownLatentIsFixedPoint)
{
    const Generator gen(tiny_generator(8));
    const std::vector<double> w{0.3, -0.4};
    const Camera cam = teacher_camera(spec_, 0, 1);
    RenderOptions ro = train_render(spec_);
    const ImageBuffer target = render_generator(gen, anchors_, w, cam, ro);
    InvertConfig c;
    c.latent_iters = 3;
    c.joint_iters = 2;
    c.render = ro;
    c.init_latent = w;
    const InvertResult r = invert_image(target, cam, gen, anchors_, c);
    ASSERT_EQ(r.log.size(), 5u);
    EXPECT_EQ(r.log[0].rec, 0.0);
    EXPECT_EQ(r.log[0].perc, 0.0);
    EXPECT_LE(r.best_loss, r.log[0].total);
    EXPECT_EQ(r.latent.size(), 2u);
}

TEST_F(DistillTest, InvertDefaultsAndErrors)
{
    const InvertConfig defaults;
    EXPECT_EQ(defaults.latent_iters, 1200);
    EXPECT_EQ(defaults.joint_iters, 800);
    const Generator gen(tiny_generator(8));
    const Camera cam = teacher_camera(spec_, 0, 0);
    InvertConfig c;
    c.latent_iters = 2;
    c.joint_iters = 0;
    c.render = train_render(spec_);
    EXPECT_THROW(invert_image(ImageBuffer(4, 4, 3), cam, gen, anchors_, c), ArgumentError);
    c.init_latent = std::vector<double>{1.0};
    EXPECT_THROW(invert_image(ImageBuffer(8, 8, 3), cam, gen, anchors_, c), ArgumentError);
    c.init_latent.reset();
    const ImageBuffer nan_target(8, 8, 3, std::numeric_limits<double>::quiet_NaN());
    try {
        invert_image(nan_target, cam, gen, anchors_, c);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.step(), 0);
    }
}

}  // namespace
}  // namespace primvol
