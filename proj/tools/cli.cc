// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "primvol/accel.h"
#include "primvol/autodiff.h"
#include "primvol/dataset.h"
#include "primvol/error.h"
#include "primvol/generator.h"
#include "primvol/guidemesh.h"
#include "primvol/parallel.h"
#include "primvol/procedural.h"
#include "primvol/render.h"
#include "primvol/teacher.h"
#include "primvol/train.h"

namespace primvol::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Input problem detected by the CLI itself.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Resolution {
    int width{0};
    int height{0};
};

Resolution parse_resolution(const std::string& s)
{
    const auto x = s.find('x');
    Resolution r;
    try {
        if (x == std::string::npos) {
            r.width = r.height = std::stoi(s);
        } else {
            r.width = std::stoi(s.substr(0, x));
            r.height = std::stoi(s.substr(x + 1));
        }
    } catch (const std::exception&) {
        throw UsageError("--res expects WxH, got '" + s + "'");
    }
    if (r.width < 1 || r.height < 1) throw UsageError("--res must be at least 1x1");
    return r;
}

struct Common {
    std::uint64_t seed{42};
    int threads{0};
    std::string res{"128x128"};
    double step{0.01};
    std::string out;
};

struct CameraArgs {
    std::string camera_file;
    double distance{4.0};
    double azimuth_deg{0.0};
    double elevation_deg{0.0};
    double fov_half_tan{0.4};
    double near{0.1};
    double far{10.0};
};

void add_camera_options(CLI::App* cmd, CameraArgs& c)
{
    cmd->add_option("--camera", c.camera_file, "camera JSON record (overrides the orbit options)");
    cmd->add_option("--distance", c.distance, "orbit distance")->capture_default_str();
    cmd->add_option("--azimuth", c.azimuth_deg, "orbit azimuth, degrees")->capture_default_str();
    cmd->add_option("--elevation", c.elevation_deg, "orbit elevation, degrees")->capture_default_str();
    cmd->add_option("--fov-half-tan", c.fov_half_tan, "tan of the half field of view")->capture_default_str();
    cmd->add_option("--near", c.near, "near distance")->capture_default_str();
    cmd->add_option("--far", c.far, "far distance")->capture_default_str();
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

Camera make_camera(const CameraArgs& c, const Resolution& r)
{
    if (!c.camera_file.empty()) {
        try {
            return camera_from_json(read_json_file(c.camera_file));
        } catch (const json::exception& e) {
            throw UsageError(c.camera_file + ": " + e.what());
        }
    }
    constexpr double deg = std::numbers::pi / 180.0;
    return orbit_camera(c.distance, c.azimuth_deg * deg, c.elevation_deg * deg, c.fov_half_tan, r.width, r.height);
}

RenderOptions make_render_options(const Common& common, const CameraArgs& cam)
{
    RenderOptions o;
    o.step = common.step;
    o.threads = common.threads;
    o.near = cam.near;
    o.far = cam.far;
    o.max_samples = static_cast<int>(std::ceil((cam.far - cam.near) / common.step)) + 1;
    o.validate();
    return o;
}

// Near and far bounds that cover the teacher orbit.
CameraArgs training_range()
{
    CameraArgs c;
    c.near = 0.5;
    c.far = 5.5;
    return c;
}

void require_file(const std::string& path, const char* flag)
{
    if (path.empty()) throw UsageError(std::string(flag) + " is required");
    if (!fs::exists(path)) throw UsageError(std::string(flag) + " path does not exist: " + path);
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_images(const fs::path& prefix, const ImageBuffer& img)
{
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    write_png(fs::path(prefix.string() + ".png"), img);
    write_pfm(fs::path(prefix.string() + ".pfm"), img);
}

AnchorSet make_anchors(const std::string& mesh_path, int grid, int lattice, double extent)
{
    if (!mesh_path.empty()) {
        require_file(mesh_path, "--mesh");
        return anchor_primitives(load_mesh(mesh_path), grid);
    }
    return lattice_anchors(lattice, extent);
}

void write_log(const std::string& path, const std::vector<LogEntry>& log, bool append = false)
{
    if (path.empty()) return;
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    for (const LogEntry& e : log) out << e.to_json().dump() << '\n';
}

void print_defaults(std::ostream& err, const Common& c)
{
    const LossWeights w;
    const AdamConfig adam;
    const GeneratorConfig g;
    json d{{"seed", c.seed},
           {"threads", resolve_threads(c.threads)},
           {"res", c.res},
           {"step", c.step},
           {"lambda_perc", w.lambda_perc},
           {"lambda_reg", w.lambda_reg},
           {"lambda_fade", w.lambda_fade},
           {"lambda_vol", w.lambda_vol},
           {"lr", adam.lr},
           {"nprim_grid", 32},
           {"n_prim", g.n_prim},
           {"payload_resolution", g.resolution},
           {"latent_dim", g.latent_dim},
           {"invert_latent_iters", InvertConfig{}.latent_iters},
           {"invert_joint_iters", InvertConfig{}.joint_iters}};
    err << "primvol defaults " << d.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"primvol: differentiable rendering of volumetric primitive mixtures"};
    app.set_config("--config", "", "TOML/INI file of option values");
    app.require_subcommand(1);
    Common common;
    app.add_option("--seed", common.seed, "random seed")->capture_default_str();
    app.add_option("--threads", common.threads, "worker threads (0: PRIMVOL_THREADS or all cores)")
        ->capture_default_str();

    std::map<std::string, std::pair<std::string, double>> defaults;
    const auto add_common = [&](CLI::App* cmd, const std::string& res_default, double step_default) {
        defaults[cmd->get_name()] = {res_default, step_default};
        cmd->add_option("--res", common.res, "resolution WxH")->default_str(res_default);
        cmd->add_option("--step", common.step, "ray-march step, world units")->default_str(std::to_string(step_default));
        cmd->add_option("--out", common.out, "output path");
        cmd->add_option("--seed", common.seed, "random seed");
        cmd->add_option("--threads", common.threads, "worker threads");
    };

    // render
    std::string scene_path;
    bool oracle = false;
    CameraArgs cam;
    auto* render_cmd = app.add_subcommand("render", "render a scene to PNG and PFM");
    render_cmd->add_option("--scene", scene_path, "scene file");
    render_cmd->add_flag("--oracle", oracle, "also render with the dense oracle and report max |diff|");
    add_camera_options(render_cmd, cam);

    // bench
    int frames = 10;
    int bench_count = 256;
    auto* bench_cmd = app.add_subcommand("bench", "time the primitive renderer against the dense oracle");
    bench_cmd->add_option("--scene", scene_path, "scene file (default: sparse procedural scene)");
    bench_cmd->add_option("--frames", frames, "timed frames per renderer")->capture_default_str();
    bench_cmd->add_option("--count", bench_count, "primitives in the procedural scene")->capture_default_str();
    add_camera_options(bench_cmd, cam);

    // gradcheck
    int probes = 500;
    auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    grad_cmd->add_option("--scene", scene_path, "scene file (default: procedural scene)");
    grad_cmd->add_option("--probes", probes, "probes per parameter class")->capture_default_str();
    add_camera_options(grad_cmd, cam);

    // scene
    ProceduralSceneSpec proc;
    auto* scene_cmd = app.add_subcommand("scene", "write a procedural scene file");
    scene_cmd->add_option("--count", proc.count, "primitives")->capture_default_str();
    scene_cmd->add_option("--payload-res", proc.resolution, "payload resolution M")->capture_default_str();
    scene_cmd->add_option("--extent", proc.extent, "placement half-width")->capture_default_str();
    scene_cmd->add_option("--density", proc.density, "peak payload density")->capture_default_str();

    // teacher
    TeacherSpec tspec;
    auto* teacher_cmd = app.add_subcommand("teacher", "render a procedural multi-view dataset");
    teacher_cmd->add_option("--samples", tspec.samples, "latent samples")->capture_default_str();
    teacher_cmd->add_option("--views", tspec.views, "views per sample")->capture_default_str();
    teacher_cmd->add_option("--latent-dim", tspec.latent_dim, "latent dimension")->capture_default_str();

    // fit
    std::string dataset_path, mesh_path, log_path, ckpt_path;
    int iters = -1;
    int nprim_grid = 32;
    int lattice = 4;
    double extent = 1.05;
    int payload_res = 8;
    auto* fit_cmd = app.add_subcommand("fit", "fit primitives to the views of one scene");
    fit_cmd->add_option("--dataset", dataset_path, "dataset directory or manifest");
    fit_cmd->add_option("--mesh", mesh_path, "guide mesh OBJ (default: a cubic lattice of anchors)");
    fit_cmd->add_option("--nprim-grid", nprim_grid, "anchor grid side on the guide mesh")->capture_default_str();
    fit_cmd->add_option("--lattice", lattice, "lattice anchors per axis when no mesh is given")->capture_default_str();
    fit_cmd->add_option("--extent", extent, "lattice half-width")->capture_default_str();
    fit_cmd->add_option("--payload-res", payload_res, "payload resolution M")->capture_default_str();
    fit_cmd->add_option("--iters", iters, "Adam steps (default 2000)");
    fit_cmd->add_option("--log", log_path, "JSONL training log");

    // distill
    int batch = 8;
    int hidden = 32;
    auto* distill_cmd = app.add_subcommand("distill", "train a generator on a dataset with latents");
    distill_cmd->add_option("--dataset", dataset_path, "dataset directory or manifest");
    distill_cmd->add_option("--mesh", mesh_path, "guide mesh OBJ (default: a cubic lattice of anchors)");
    distill_cmd->add_option("--nprim-grid", nprim_grid, "anchor grid side on the guide mesh")->capture_default_str();
    distill_cmd->add_option("--lattice", lattice, "lattice anchors per axis when no mesh is given")->capture_default_str();
    distill_cmd->add_option("--extent", extent, "lattice half-width")->capture_default_str();
    distill_cmd->add_option("--payload-res", payload_res, "payload resolution M")->capture_default_str();
    distill_cmd->add_option("--hidden", hidden, "hidden width of the payload networks")->capture_default_str();
    distill_cmd->add_option("--batch", batch, "minibatch size")->capture_default_str();
    distill_cmd->add_option("--iters", iters, "total Adam steps (default 2000)");
    distill_cmd->add_option("--ckpt", ckpt_path, "checkpoint; resumed from when it exists");
    distill_cmd->add_option("--log", log_path, "JSONL training log (appended)");

    // invert
    std::string target_path;
    int joint_iters = -1;
    int record_index = 0;
    auto* invert_cmd = app.add_subcommand("invert", "recover a latent code for a target image");
    invert_cmd->add_option("--ckpt", ckpt_path, "trained generator checkpoint");
    invert_cmd->add_option("--dataset", dataset_path, "dataset supplying target and camera");
    invert_cmd->add_option("--record", record_index, "dataset record index")->capture_default_str();
    invert_cmd->add_option("--mesh", mesh_path, "guide mesh OBJ used in training");
    invert_cmd->add_option("--nprim-grid", nprim_grid, "anchor grid side on the guide mesh")->capture_default_str();
    invert_cmd->add_option("--lattice", lattice, "lattice anchors per axis when no mesh is given")->capture_default_str();
    invert_cmd->add_option("--extent", extent, "lattice half-width")->capture_default_str();
    invert_cmd->add_option("--iters", iters, "latent-only steps (default 1200)");
    invert_cmd->add_option("--joint-iters", joint_iters, "joint latent and generator steps (default 800)");

    // inspect
    auto* inspect_cmd = app.add_subcommand("inspect", "primitive overlay image and placement table");
    inspect_cmd->add_option("--scene", scene_path, "scene file");
    add_camera_options(inspect_cmd, cam);

    add_common(render_cmd, "256x256", 0.01);
    add_common(bench_cmd, "256x256", 0.01);
    add_common(grad_cmd, "24x24", 0.02);
    add_common(scene_cmd, "1x1", 0.01);
    add_common(teacher_cmd, "128x128", 0.01);
    add_common(fit_cmd, "128x128", 0.02);
    add_common(distill_cmd, "32x32", 0.02);
    add_common(invert_cmd, "32x32", 0.02);
    add_common(inspect_cmd, "256x256", 0.01);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();
        if (cmd->count("--res") == 0) common.res = defaults.at(name).first;
        if (cmd->count("--step") == 0) common.step = defaults.at(name).second;
        const auto option_res = [&] { return parse_resolution(common.res); };
        print_defaults(err, common);
        json report{{"command", name}, {"seed", common.seed}, {"threads", resolve_threads(common.threads)}};

        if (name == "render") {
            require_file(scene_path, "--scene");
            const PrimitiveSet scene = load_scene(scene_path);
            const Camera camera = make_camera(cam, option_res());
            const RenderOptions opts = make_render_options(common, cam);
            auto t0 = std::chrono::steady_clock::now();
            const Bvh bvh = Bvh::build(scene);
            const RenderResult r = render(camera, scene, bvh, opts);
            const double ms = ms_since(t0);
            const fs::path prefix = common.out.empty() ? fs::path("render") : fs::path(common.out);
            write_images(prefix, r.image);
            report["ms_per_frame"] = ms;
            report["rays_per_second"] = camera.pixel_count() / std::max(ms * 1e-3, 1e-12);
            report["output"] = prefix.string();
            if (oracle) {
                t0 = std::chrono::steady_clock::now();
                const RenderResult o = render_dense_oracle(camera, scene, opts);
                report["oracle_ms"] = ms_since(t0);
                report["max_abs_diff"] = max_abs_difference(r.image, o.image);
                write_images(prefix.string() + "_oracle", o.image);
            }
        } else if (name == "bench") {
            const Resolution res = option_res();
            PrimitiveSet scene;
            if (!scene_path.empty()) {
                require_file(scene_path, "--scene");
                scene = load_scene(scene_path);
            } else {
                ProceduralSceneSpec spec;
                spec.count = bench_count;
                spec.extent = 1.2;
                spec.min_scale = 0.02;
                spec.max_scale = 0.06;
                spec.seed = common.seed;
                scene = procedural_scene(spec);
            }
            if (frames < 1) throw UsageError("--frames must be positive");
            const Camera camera = make_camera(cam, res);
            const RenderOptions opts = make_render_options(common, cam);
            const Bvh bvh = Bvh::build(scene);
            render(camera, scene, bvh, opts);  // warm-up
            std::vector<double> fast, dense;
            for (int f = 0; f < frames; ++f) {
                auto t0 = std::chrono::steady_clock::now();
                render(camera, scene, bvh, opts);
                fast.push_back(ms_since(t0));
            }
            render_dense_oracle(camera, scene, opts);
            for (int f = 0; f < frames; ++f) {
                auto t0 = std::chrono::steady_clock::now();
                render_dense_oracle(camera, scene, opts);
                dense.push_back(ms_since(t0));
            }
            const double mf = median(fast), md = median(dense);
            report["primitives"] = scene.size();
            report["span_fraction"] = span_fraction(camera, scene, opts);
            report["frames"] = frames;
            report["primitive_ms"] = mf;
            report["oracle_ms"] = md;
            report["speedup"] = md / std::max(mf, 1e-9);
        } else if (name == "gradcheck") {
            PrimitiveSet scene;
            if (!scene_path.empty()) {
                require_file(scene_path, "--scene");
                scene = load_scene(scene_path);
            } else {
                ProceduralSceneSpec spec;
                spec.count = 64;
                spec.resolution = 4;
                spec.extent = 0.8;
                spec.min_scale = 0.08;
                spec.max_scale = 0.2;
                spec.density = 1.5;
                spec.seed = common.seed;
                scene = procedural_scene(spec);
            }
            const Camera camera = make_camera(cam, option_res());
            const RenderOptions opts = make_render_options(common, cam);
            GradCheckOptions check;
            check.probes = probes;
            check.seed = common.seed;
            const GradCheckReport r = grad_check(scene, camera, opts, check);
            report["gradcheck"] = r.to_json();
            out << report.dump(2) << '\n';
            return r.pass ? kExitOk : kExitInternal;
        } else if (name == "scene") {
            if (common.out.empty()) throw UsageError("--out is required");
            proc.seed = common.seed;
            const PrimitiveSet scene = procedural_scene(proc);
            save_scene(scene, common.out);
            report["primitives"] = scene.size();
            report["output"] = common.out;
        } else if (name == "teacher") {
            if (common.out.empty()) throw UsageError("--out is required");
            const Resolution res = option_res();
            tspec.width = res.width;
            tspec.height = res.height;
            tspec.step = common.step;
            tspec.seed = common.seed;
            tspec.validate();
            const MultiViewDataset ds = make_teacher(tspec, common.out);
            report["records"] = ds.size();
            report["output"] = common.out;
        } else if (name == "fit") {
            require_file(dataset_path, "--dataset");
            if (common.out.empty()) throw UsageError("--out is required");
            const MultiViewDataset ds = load_dataset(dataset_path);
            FitConfig config;
            config.iters = iters >= 0 ? iters : 2000;
            config.payload_resolution = payload_res;
            config.seed = common.seed;
            config.log_every = 10;
            config.render = make_render_options(common, training_range());
            const AnchorSet anchors = make_anchors(mesh_path, nprim_grid, lattice, extent);
            const FitResult r = fit_scene(ds, anchors, config);
            save_scene(r.scene, common.out);
            write_log(log_path, r.log);
            report["output"] = common.out;
            report["final_loss"] = r.log.empty() ? 0.0 : r.log.back().total;
        } else if (name == "distill") {
            require_file(dataset_path, "--dataset");
            if (ckpt_path.empty()) throw UsageError("--ckpt is required");
            const MultiViewDataset ds = load_dataset(dataset_path);
            const AnchorSet anchors = make_anchors(mesh_path, nprim_grid, lattice, extent);
            GeneratorConfig gc;
            gc.latent_dim = ds.latent_dim();
            gc.n_prim = static_cast<int>(anchors.size());
            gc.resolution = payload_res;
            gc.geo_hidden = {32, 32};
            gc.alpha_hidden = {hidden};
            gc.rgb_hidden = {hidden};
            gc.alpha_init = 0.5;
            gc.seed = common.seed;
            DistillConfig config;
            config.iters = iters >= 0 ? iters : 2000;
            config.batch = batch;
            config.seed = common.seed;
            config.checkpoint = ckpt_path;
            config.render = make_render_options(common, training_range());
            const DistillResult r = distill(ds, anchors, Generator(gc), config);
            write_log(log_path, r.log, true);
            report["resumed"] = r.resumed;
            report["steps_run"] = r.steps_run;
            report["checkpoint"] = ckpt_path;
            report["final_loss"] = r.log.empty() ? 0.0 : r.log.back().total;
        } else if (name == "invert") {
            require_file(ckpt_path, "--ckpt");
            require_file(dataset_path, "--dataset");
            const GeneratorCheckpoint ckpt = load_checkpoint(ckpt_path);
            const MultiViewDataset ds = load_dataset(dataset_path);
            if (record_index < 0 || static_cast<std::size_t>(record_index) >= ds.size())
                throw UsageError("--record out of range");
            const ViewRecord& rec = ds.records[record_index];
            const AnchorSet anchors = make_anchors(mesh_path, nprim_grid, lattice, extent);
            InvertConfig config;
            if (iters >= 0) config.latent_iters = iters;
            if (joint_iters >= 0) config.joint_iters = joint_iters;
            config.render = make_render_options(common, training_range());
            const InvertResult r = invert_image(ds.load_image(rec), rec.camera, ckpt.generator, anchors, config);
            const ImageBuffer img = render_generator(r.generator, anchors, r.latent, rec.camera, config.render);
            report["latent"] = r.latent;
            report["best_loss"] = r.best_loss;
            report["best_step"] = r.best_step;
            report["psnr"] = psnr(img, ds.load_image(rec));
            if (rec.latent) report["reference_latent"] = *rec.latent;
            if (!common.out.empty()) {
                write_images(common.out, img);
                GeneratorCheckpoint tuned;
                tuned.generator = r.generator;
                tuned.extra["latent"] = r.latent;
                save_checkpoint(tuned, common.out + ".ckpt");
            }
        } else if (name == "inspect") {
            require_file(scene_path, "--scene");
            const PrimitiveSet scene = load_scene(scene_path);
            const Camera camera = make_camera(cam, option_res());
            const RenderOptions opts = make_render_options(common, cam);
            const fs::path prefix = common.out.empty() ? fs::path("inspect") : fs::path(common.out);
            write_images(prefix, render_primitive_overlay(camera, scene, Bvh::build(scene), opts));
            json table = json::array();
            std::ofstream csv(prefix.string() + ".csv");
            if (!csv) throw IoError("cannot write " + prefix.string() + ".csv");
            csv << "index,tx,ty,tz,yaw,pitch,roll,sx,sy,sz\n";
            for (std::size_t k = 0; k < scene.size(); ++k) {
                const Primitive& p = scene.primitives[k];
                const Vec3 e = p.rotation.euler_zyx();
                table.push_back({{"index", k},
                                 {"position", {p.position.x, p.position.y, p.position.z}},
                                 {"euler_zyx", {e.x, e.y, e.z}},
                                 {"scale", {p.scale.x, p.scale.y, p.scale.z}}});
                csv << k << ',' << p.position.x << ',' << p.position.y << ',' << p.position.z << ',' << e.x << ','
                    << e.y << ',' << e.z << ',' << p.scale.x << ',' << p.scale.y << ',' << p.scale.z << '\n';
            }
            report["output"] = prefix.string();
            report["primitives"] = table;
        }
        out << report.dump(2) << '\n';
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SceneError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const MeshError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivergenceError& e) {
        err << "error: diverged at step " << e.step() << ": " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace primvol::cli
