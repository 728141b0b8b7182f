// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/train.h"

#include <chrono>
#include <cmath>
#include <random>

#include "primvol/accel.h"
#include "primvol/autodiff.h"
#include "primvol/error.h"
#include "primvol/random.h"

namespace primvol {

AnchorSet lattice_anchors(int per_axis, double extent, double overlap)
{
    if (per_axis < 1 || !(extent > 0.0) || !(overlap >= 0.0))
        throw ArgumentError("lattice needs per_axis >= 1, extent > 0, overlap >= 0");
    AnchorSet a;
    a.grid_side = per_axis;
    const double cell = 2.0 * extent / per_axis;
    for (int z = 0; z < per_axis; ++z)
        for (int y = 0; y < per_axis; ++y)
            for (int x = 0; x < per_axis; ++x) {
                a.positions.push_back(Vec3{x + 0.5, y + 0.5, z + 0.5} * cell - Vec3::splat(extent));
                a.rotations.push_back(Rotation{});
                a.inherited.push_back(false);
            }
    a.base_scale = Vec3::splat(0.5 * cell * (1.0 + overlap));
    return a;
}

nlohmann::json LogEntry::to_json() const
{
    return {{"step", step}, {"total", total}, {"rec", rec},       {"perc", perc},
            {"adv", adv},   {"vol", vol},     {"critic", critic}, {"wall_seconds", wall_seconds}};
}

double FadeSchedule::exponent_at(int step, double final_exponent, double lambda_fade) const
{
    if (!anneal) return final_exponent;
    return final_exponent + (start_exponent - final_exponent) * std::exp(-lambda_fade * step);
}

void FitConfig::validate() const
{
    if (iters < 0) throw ArgumentError("iters must be non-negative");
    if (!(lr >= 0.0) || !(lr_rgb >= 0.0) || !(lr_alpha >= 0.0)) throw ArgumentError("learning rates must be non-negative");
    if (payload_resolution < 1) throw ArgumentError("payload resolution must be positive");
    if (!(init_alpha >= 0.0)) throw ArgumentError("initial alpha must be non-negative");
    if (log_every < 1) throw ArgumentError("log_every must be positive");
    weights.validate();
    render.validate();
}

void DistillConfig::validate() const
{
    if (iters < 0 || batch < 1) throw ArgumentError("distill needs iters >= 0 and batch >= 1");
    if (!(lr >= 0.0) || !(critic_lr >= 0.0)) throw ArgumentError("learning rates must be non-negative");
    if (log_every < 1 || checkpoint_every < 1) throw ArgumentError("log and checkpoint intervals must be positive");
    weights.validate();
    render.validate();
}

void InvertConfig::validate() const
{
    if (latent_iters < 0 || joint_iters < 0) throw ArgumentError("inversion phase lengths must be non-negative");
    if (!(lr_latent >= 0.0) || !(lr_params >= 0.0)) throw ArgumentError("learning rates must be non-negative");
    if (log_every < 1) throw ArgumentError("log_every must be positive");
    weights.validate();
    render.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool all_finite(std::span<const double> v)
{
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

LogEntry log_entry(int step, const TotalLoss& l)
{
    LogEntry e;
    e.step = step;
    e.total = l.total;
    e.rec = l.rec;
    e.perc = l.perc;
    e.adv = l.adv;
    e.vol = l.vol;
    return e;
}

std::vector<ImageBuffer> load_all(const MultiViewDataset& ds)
{
    std::vector<ImageBuffer> images;
    images.reserve(ds.size());
    for (const ViewRecord& r : ds.records) images.push_back(ds.load_image(r));
    return images;
}

// Flat fit parameters: 9 placement values per primitive, payload rgb and alpha.
struct FitParams {
    std::vector<double> placement;
    std::vector<double> rgb;
    std::vector<double> alpha;
};

DeltaSet deltas_of(const std::vector<double>& placement)
{
    const std::size_t n = placement.size() / 9;
    DeltaSet d = DeltaSet::zeros(n);
    for (std::size_t k = 0; k < n; ++k)
        for (int a = 0; a < 3; ++a) {
            d.translation[k][a] = placement[9 * k + a];
            d.rotation[k][a] = placement[9 * k + 3 + a];
            d.scale[k][a] = placement[9 * k + 6 + a];
        }
    return d;
}

std::vector<Payload> payloads_of(const FitParams& p, std::size_t n, int m)
{
    const std::size_t cells = static_cast<std::size_t>(m) * m * m;
    std::vector<Payload> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k].resolution = m;
        out[k].rgb.assign(p.rgb.begin() + 3 * k * cells, p.rgb.begin() + 3 * (k + 1) * cells);
        out[k].alpha.assign(p.alpha.begin() + k * cells, p.alpha.begin() + (k + 1) * cells);
    }
    return out;
}

}  // namespace

FitResult fit_scene(const MultiViewDataset& views, const AnchorSet& anchors, const FitConfig& config,
                    const LogCallback& on_log)
{
    config.validate();
    views.validate();
    if (views.size() < 2) throw ArgumentError("fit_scene needs at least two views");
    if (anchors.size() == 0) throw ArgumentError("fit_scene needs at least one anchor");
    const std::vector<ImageBuffer> targets = load_all(views);
    const std::size_t n = anchors.size();
    const int m = config.payload_resolution;
    const std::size_t cells = static_cast<std::size_t>(m) * m * m;

    FitParams p;
    p.placement.assign(9 * n, 0.0);
    p.rgb.resize(3 * n * cells);
    p.alpha.assign(n * cells, config.init_alpha);
    for (std::size_t i = 0; i < n * cells; ++i)
        for (int c = 0; c < 3; ++c) p.rgb[3 * i + c] = config.init_rgb[c];

    Adam adam_placement(p.placement.size(), {.lr = config.lr});
    Adam adam_rgb(p.rgb.size(), {.lr = config.lr_rgb});
    Adam adam_alpha(p.alpha.size(), {.lr = config.lr_alpha});
    std::vector<double> g_placement(p.placement.size()), g_rgb(p.rgb.size()), g_alpha(p.alpha.size());

    RenderOptions ropts = config.render;
    ropts.record_tape = true;
    const Vec3 background = ropts.background.value_or(Vec3{});
    const double base_exponent = ropts.fade.exponent;

    FitResult result;
    const auto t0 = Clock::now();
    for (int step = 0; step < config.iters; ++step) {
        std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(step)));
        const std::size_t v = std::uniform_int_distribution<std::size_t>(0, views.size() - 1)(rng);
        ropts.fade.exponent =
            config.fade_schedule.exponent_at(step, base_exponent, config.weights.lambda_fade);

        const DeltaSet deltas = deltas_of(p.placement);
        const Composition comp = compose(anchors, deltas, payloads_of(p, n, m), background);
        const Bvh bvh = Bvh::build(comp.scene);
        const RenderResult rendered = render(views.records[v].camera, comp.scene, bvh, ropts);
        const TotalLoss loss = total_loss(rendered.image, targets[v], comp.scene, config.weights);
        if (!std::isfinite(loss.total)) throw DivergenceError("fit_scene loss is not finite", step);
        SceneGrads grads = backward(*rendered.tape, comp.scene, loss.image_grad, {ropts.threads});

        for (std::size_t k = 0; k < n; ++k) {
            const PrimitiveGrads& g = grads.primitives[k];
            const Vec3 dr_bar = so3_right_jacobian(deltas.rotation[k]).transpose() * g.rotation;
            for (int a = 0; a < 3; ++a) {
                g_placement[9 * k + a] = g.position[a];
                g_placement[9 * k + 3 + a] = dr_bar[a];
                g_placement[9 * k + 6 + a] = comp.scale_clamped[k][a] ? 0.0 : g.scale[a] + loss.scale_grad[k][a];
            }
            std::copy(g.rgb.begin(), g.rgb.end(), g_rgb.begin() + 3 * k * cells);
            std::copy(g.alpha.begin(), g.alpha.end(), g_alpha.begin() + k * cells);
        }
        if (!all_finite(g_placement) || !all_finite(g_rgb) || !all_finite(g_alpha))
            throw DivergenceError("fit_scene gradient is not finite", step);

        adam_placement.step(p.placement, g_placement);
        adam_rgb.step(p.rgb, g_rgb);
        adam_alpha.step(p.alpha, g_alpha);
        for (double& x : p.rgb) x = std::clamp(x, 0.0, 1.0);
        for (double& x : p.alpha) x = std::max(x, 0.0);

        if (step % config.log_every == 0 || step + 1 == config.iters) {
            LogEntry e = log_entry(step, loss);
            e.wall_seconds = seconds_since(t0);
            result.log.push_back(e);
            if (on_log) on_log(e);
        }
    }
    result.deltas = deltas_of(p.placement);
    result.scene = compose(anchors, result.deltas, payloads_of(p, n, m), background).scene;
    return result;
}

Vec3 view_direction(const Camera& camera) { return normalize(camera.forward()); }

GeneratorStep generator_step(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                             const Camera& camera, const ImageBuffer& target, const LossWeights& weights,
                             const RenderOptions& render_opts, const Critic* critic)
{
    RenderOptions ropts = render_opts;
    ropts.record_tape = true;
    GeneratorStep out;
    out.generated = generate_scene(gen, anchors, w, view_direction(camera), ropts.background.value_or(Vec3{}));
    const PrimitiveSet& scene = out.generated.scene();
    const Bvh bvh = Bvh::build(scene);
    RenderResult r = render(camera, scene, bvh, ropts);
    out.loss = total_loss(r.image, target, scene, weights, critic);
    SceneGrads grads = backward(*r.tape, scene, out.loss.image_grad, {ropts.threads});
    for (std::size_t k = 0; k < scene.size(); ++k) grads.primitives[k].scale += out.loss.scale_grad[k];
    out.grads = generator_backward(gen, out.generated, grads);
    out.image = std::move(r.image);
    return out;
}

ImageBuffer render_generator(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                             const Camera& camera, const RenderOptions& render_opts, const Vec3& background)
{
    RenderOptions ropts = render_opts;
    ropts.record_tape = false;
    const GeneratedScene g =
        generate_scene(gen, anchors, w, view_direction(camera), ropts.background.value_or(background));
    return render(camera, g.scene(), Bvh::build(g.scene()), ropts).image;
}

namespace {

nlohmann::json critic_state(const Critic& critic, const Adam& adam)
{
    return {{"params", critic.params()},
            {"adam_m", adam.first_moment()},
            {"adam_v", adam.second_moment()},
            {"adam_steps", adam.steps()}};
}

void restore_critic(const nlohmann::json& j, Critic& critic, Adam& adam)
{
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != critic.params().size()) throw ArgumentError("checkpoint critic does not match config");
    critic.params() = params;
    adam.first_moment() = j.at("adam_m").get<std::vector<double>>();
    adam.second_moment() = j.at("adam_v").get<std::vector<double>>();
    adam.set_steps(j.at("adam_steps").get<std::int64_t>());
}

}  // namespace

DistillResult distill(const MultiViewDataset& dataset, const AnchorSet& anchors, const Generator& init,
                      const DistillConfig& config, const LogCallback& on_log, int stop_after)
{
    config.validate();
    dataset.validate();
    if (!dataset.has_latents()) throw ArgumentError("distill needs a dataset with latents");
    if (dataset.latent_dim() != init.config().latent_dim)
        throw ArgumentError("dataset latent dimension " + std::to_string(dataset.latent_dim()) +
                            " does not match the generator's " + std::to_string(init.config().latent_dim));
    const std::vector<ImageBuffer> targets = load_all(dataset);

    DistillResult result;
    result.generator = init;
    Generator& gen = result.generator;
    Adam adam(gen.param_count(), {.lr = config.lr});
    std::unique_ptr<ConvCritic> critic;
    Adam critic_adam;
    if (config.weights.adversarial) {
        critic = std::make_unique<ConvCritic>(dataset.width(), dataset.height(), 3, config.critic_channels,
                                              config.critic_channels, derive_seed(config.seed, 0xC0FFEE));
        critic_adam = Adam(critic->params().size(), {.lr = config.critic_lr});
    }

    int start = 0;
    if (config.checkpoint && std::filesystem::exists(*config.checkpoint)) {
        GeneratorCheckpoint ckpt = load_checkpoint(*config.checkpoint);
        if (!(ckpt.generator.config() == init.config()))
            throw ArgumentError("checkpoint generator config differs from the requested one");
        gen = std::move(ckpt.generator);
        if (!ckpt.adam_m.empty()) {
            adam.first_moment() = std::move(ckpt.adam_m);
            adam.second_moment() = std::move(ckpt.adam_v);
            adam.set_steps(ckpt.adam_steps);
        }
        if (critic) {
            if (!ckpt.extra.contains("critic")) throw ArgumentError("checkpoint has no critic state");
            restore_critic(ckpt.extra.at("critic"), *critic, critic_adam);
        }
        start = static_cast<int>(ckpt.step);
        result.resumed = true;
    }

    const auto save = [&](int next_step) {
        if (!config.checkpoint) return;
        GeneratorCheckpoint ckpt;
        ckpt.generator = gen;
        ckpt.step = next_step;
        ckpt.adam_m = adam.first_moment();
        ckpt.adam_v = adam.second_moment();
        ckpt.adam_steps = adam.steps();
        if (critic) ckpt.extra["critic"] = critic_state(*critic, critic_adam);
        save_checkpoint(ckpt, *config.checkpoint);
    };

    RenderOptions ropts = config.render;
    const double base_exponent = ropts.fade.exponent;
    std::vector<double> grad(gen.param_count());
    std::vector<double> critic_grad;
    const auto t0 = Clock::now();
    int step = start;
    for (; step < config.iters; ++step) {
        if (stop_after > 0 && result.steps_run >= stop_after) break;
        std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(step)));
        std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
        ropts.fade.exponent = config.fade_schedule.exponent_at(step, base_exponent, config.weights.lambda_fade);

        std::fill(grad.begin(), grad.end(), 0.0);
        if (critic) critic_grad.assign(critic->params().size(), 0.0);
        TotalLoss mean;
        double critic_term = 0.0;
        const double inv = 1.0 / config.batch;
        for (int b = 0; b < config.batch; ++b) {
            const std::size_t i = pick(rng);
            const ViewRecord& rec = dataset.records[i];
            const GeneratorStep gs =
                generator_step(gen, anchors, *rec.latent, rec.camera, targets[i], config.weights, ropts, critic.get());
            if (!std::isfinite(gs.loss.total)) throw DivergenceError("distill loss is not finite", step);
            for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += inv * gs.grads.params[j];
            mean.total += inv * gs.loss.total;
            mean.rec += inv * gs.loss.rec;
            mean.perc += inv * gs.loss.perc;
            mean.adv += inv * gs.loss.adv;
            mean.vol += inv * gs.loss.vol;
            if (critic) {
                const DiscLoss d = loss_disc(*critic, gs.image, targets[i]);
                critic_term += inv * d.discriminator_term;
                std::vector<double> g(critic_grad.size(), 0.0);
                critic_objective_grad(*critic, gs.image, targets[i], config.weights.lambda_reg, g);
                for (std::size_t j = 0; j < g.size(); ++j) critic_grad[j] += inv * g[j];
            }
        }
        if (!all_finite(grad)) throw DivergenceError("distill gradient is not finite", step);
        adam.step(gen.params(), grad);
        if (critic) {
            if (!all_finite(critic_grad)) throw DivergenceError("critic gradient is not finite", step);
            critic_adam.step(critic->params(), critic_grad);
        }
        ++result.steps_run;

        if (step % config.log_every == 0 || step + 1 == config.iters) {
            LogEntry e = log_entry(step, mean);
            e.critic = critic_term;
            e.wall_seconds = seconds_since(t0);
            result.log.push_back(e);
            if (on_log) on_log(e);
        }
        if ((step + 1) % config.checkpoint_every == 0) save(step + 1);
    }
    save(step);
    return result;
}

InvertResult invert_image(const ImageBuffer& target, const Camera& camera, const Generator& gen,
                          const AnchorSet& anchors, const InvertConfig& config, const LogCallback& on_log)
{
    config.validate();
    if (target.width() != camera.width || target.height() != camera.height || target.channels() != 3)
        throw ArgumentError("target image does not match the camera");
    const int dim = gen.config().latent_dim;
    std::vector<double> w = config.init_latent.value_or(std::vector<double>(dim, 0.0));
    if (static_cast<int>(w.size()) != dim) throw ArgumentError("initial latent has the wrong dimension");

    InvertResult result;
    result.generator = gen;
    result.latent = w;
    result.best_loss = std::numeric_limits<double>::infinity();
    Generator current = gen;
    Adam adam_w(w.size(), {.lr = config.lr_latent});
    Adam adam_p(current.param_count(), {.lr = config.lr_params});
    const int total = std::max(1, config.latent_iters + config.joint_iters);
    const auto t0 = Clock::now();
    for (int step = 0; step < total; ++step) {
        const bool joint = step >= config.latent_iters;
        const GeneratorStep gs = generator_step(current, anchors, w, camera, target, config.weights, config.render);
        if (!std::isfinite(gs.loss.total)) throw DivergenceError("inversion loss is not finite", step);
        if (gs.loss.total < result.best_loss) {
            result.best_loss = gs.loss.total;
            result.best_step = step;
            result.latent = w;
            if (joint) result.generator = current;
        }
        if (step % config.log_every == 0 || step + 1 == total) {
            LogEntry e = log_entry(step, gs.loss);
            e.wall_seconds = seconds_since(t0);
            result.log.push_back(e);
            if (on_log) on_log(e);
        }
        if (config.latent_iters + config.joint_iters == 0) break;
        if (!all_finite(gs.grads.latent) || !all_finite(gs.grads.params))
            throw DivergenceError("inversion gradient is not finite", step);
        adam_w.step(w, gs.grads.latent);
        if (joint) adam_p.step(current.params(), gs.grads.params);
    }
    // The best state may predate the joint phase; its generator is then the input one.
    if (result.best_step < config.latent_iters) result.generator = gen;
    return result;
}

}  // namespace primvol
