// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "primvol/camera.h"
#include "primvol/dataset.h"
#include "primvol/generator.h"
#include "primvol/image.h"
#include "primvol/scene.h"

namespace primvol {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliRun {
    int code{0};
    std::string out;
    std::string err;

    json report() const { return json::parse(out); }
};

CliRun run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "primvol");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("primvol_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string make_scene(int count = 8)
    {
        const std::string p = path("scene.pvs");
        const CliRun r = run_cli({"scene", "--count", std::to_string(count), "--payload-res", "4", "--out", p});
        EXPECT_EQ(r.code, cli::kExitOk) << r.err;
        return p;
    }

    fs::path dir_;
};

TEST_F(CliTest, NoSubcommandIsUsageError)
{
    EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST_F(CliTest, HelpExitsZero)
{
    const CliRun r = run_cli({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("render"), std::string::npos);
}

TEST_F(CliTest, UnknownOptionIsUsageError)
{
    EXPECT_EQ(run_cli({"render", "--no-such-flag"}).code, cli::kExitUsage);
}

TEST_F(CliTest, MissingSceneIsUsageError)
{
    const CliRun r = run_cli({"render", "--scene", path("absent.pvs")});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_EQ(run_cli({"render"}).code, cli::kExitUsage);
}

TEST_F(CliTest, BadResolutionIsUsageError)
{
    const std::string scene = make_scene();
    EXPECT_EQ(run_cli({"render", "--scene", scene, "--res", "axb"}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"render", "--scene", scene, "--res", "0x4"}).code, cli::kExitUsage);
}

TEST_F(CliTest, CorruptSceneIsUsageError)
{
    const std::string p = path("bad.pvs");
    std::ofstream(p) << "not a scene";
    EXPECT_EQ(run_cli({"render", "--scene", p, "--res", "4x4"}).code, cli::kExitUsage);
}

TEST_F(CliTest, PrintsDefaults)
{
    const CliRun r = run_cli({"scene", "--out", path("s.pvs")});
    ASSERT_EQ(r.code, cli::kExitOk);
    const auto pos = r.err.find("primvol defaults ");
    ASSERT_NE(pos, std::string::npos);
    const std::string line = r.err.substr(pos + 17, r.err.find('\n', pos) - pos - 17);
    const json d = json::parse(line);
    EXPECT_EQ(d["seed"], 42);
    EXPECT_EQ(d["lambda_perc"], 20.0);
    EXPECT_EQ(d["invert_latent_iters"], 1200);
    EXPECT_EQ(d["invert_joint_iters"], 800);
}

TEST_F(CliTest, RenderIsBitwiseAcrossThreads)
{
    const std::string scene = make_scene();
    const CliRun a = run_cli({"render", "--scene", scene, "--res", "24x20", "--threads", "1", "--out", path("a")});
    const CliRun b = run_cli({"render", "--scene", scene, "--res", "24x20", "--threads", "4", "--out", path("b")});
    ASSERT_EQ(a.code, cli::kExitOk) << a.err;
    ASSERT_EQ(b.code, cli::kExitOk) << b.err;
    const ImageBuffer ia = read_pfm(path("a.pfm"));
    const ImageBuffer ib = read_pfm(path("b.pfm"));
    EXPECT_EQ(ia.width(), 24);
    EXPECT_EQ(ia.height(), 20);
    EXPECT_TRUE(std::ranges::equal(ia.data(), ib.data()));
    EXPECT_TRUE(fs::exists(path("a.png")));
}

TEST_F(CliTest, RenderOracleDifference)
{
    const std::string scene = make_scene();
    const CliRun r = run_cli({"render", "--scene", scene, "--res", "16x16", "--oracle", "--out", path("o")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const json rep = r.report();
    EXPECT_LT(rep["max_abs_diff"].get<double>(), 1e-4);
    EXPECT_GT(rep["rays_per_second"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(path("o_oracle.pfm")));
}

TEST_F(CliTest, CameraFileOverridesOrbit)
{
    const std::string scene = make_scene();
    const Camera cam = look_at({0, 0, -4}, {0, 0, 0}, {0, -1, 0}, 15.0, 12, 10);
    const std::string cam_path = path("cam.json");
    std::ofstream(cam_path) << camera_to_json(cam).dump();
    const CliRun r = run_cli({"render", "--scene", scene, "--camera", cam_path, "--out", path("c")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const ImageBuffer img = read_pfm(path("c.pfm"));
    EXPECT_EQ(img.width(), 12);
    EXPECT_EQ(img.height(), 10);

    const std::string bad = path("bad.json");
    std::ofstream(bad) << "{";
    EXPECT_EQ(run_cli({"render", "--scene", scene, "--camera", bad}).code, cli::kExitUsage);
}

TEST_F(CliTest, BenchReportsSpeedupOnEmptyScene)
{
    const std::string p = path("empty.pvs");
    ASSERT_EQ(run_cli({"scene", "--count", "4", "--density", "0", "--out", p}).code, cli::kExitOk);
    const CliRun r = run_cli({"bench", "--scene", p, "--res", "8x8", "--frames", "1"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const json rep = r.report();
    EXPECT_TRUE(std::isfinite(rep["speedup"].get<double>()));
    EXPECT_GE(rep["span_fraction"].get<double>(), 0.0);
    EXPECT_LE(rep["span_fraction"].get<double>(), 1.0);
    EXPECT_EQ(rep["frames"], 1);
}

TEST_F(CliTest, BenchProceduralScene)
{
    const CliRun r = run_cli({"bench", "--res", "16x16", "--frames", "1", "--count", "16"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.report()["primitives"], 16);
    EXPECT_EQ(run_cli({"bench", "--frames", "0", "--res", "4x4"}).code, cli::kExitUsage);
}

TEST_F(CliTest, GradcheckPasses)
{
    const CliRun r = run_cli({"gradcheck"});
    EXPECT_EQ(r.code, cli::kExitOk) << r.out;
    const json rep = r.report();
    EXPECT_TRUE(rep["gradcheck"]["pass"].get<bool>());
    for (const json& c : rep["gradcheck"]["classes"]) EXPECT_EQ(c["checked"], 500);
}

TEST_F(CliTest, InspectWritesTableAndOverlay)
{
    const std::string scene = make_scene(5);
    const CliRun r = run_cli({"inspect", "--scene", scene, "--res", "16x16", "--out", path("ins")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.report()["primitives"].size(), 5u);
    EXPECT_TRUE(fs::exists(path("ins.png")));
    std::ifstream csv(path("ins.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "index,tx,ty,tz,yaw,pitch,roll,sx,sy,sz");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 5);
}

TEST_F(CliTest, ConfigFileSuppliesOptions)
{
    const std::string cfg = path("run.ini");
    const std::string out = path("from_config.pvs");
    std::ofstream(cfg) << "seed = 7\n[scene]\ncount = 3\nout = \"" << out << "\"\n";
    const CliRun r = run_cli({"--config", cfg, "scene"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.report()["primitives"], 3);
    EXPECT_EQ(r.report()["seed"], 7);
    EXPECT_EQ(load_scene(out).size(), 3u);
}

TEST_F(CliTest, TrainingPipeline)
{
    const std::string ds = path("ds");
    CliRun r = run_cli({"teacher", "--samples", "2", "--views", "2", "--latent-dim", "2", "--res", "8x8", "--out", ds});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.report()["records"], 4);

    const std::string fitted = path("fit.pvs");
    r = run_cli({"fit", "--dataset", ds, "--res", "8x8", "--lattice", "2", "--payload-res", "2", "--iters", "3",
                 "--out", fitted, "--log", path("fit.jsonl")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(load_scene(fitted).size(), 8u);
    EXPECT_TRUE(fs::exists(path("fit.jsonl")));

    const std::string ckpt = path("gen.ckpt");
    const std::vector<std::string> distill_args{"distill", "--dataset", ds, "--lattice", "2", "--payload-res", "2",
                                                "--hidden", "4", "--batch", "2", "--ckpt", ckpt, "--log",
                                                path("distill.jsonl")};
    std::vector<std::string> first = distill_args;
    first.insert(first.end(), {"--iters", "2"});
    r = run_cli(first);
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_FALSE(r.report()["resumed"].get<bool>());
    EXPECT_EQ(load_checkpoint(ckpt).step, 2);

    std::vector<std::string> second = distill_args;
    second.insert(second.end(), {"--iters", "3"});
    r = run_cli(second);
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_TRUE(r.report()["resumed"].get<bool>());
    EXPECT_EQ(r.report()["steps_run"], 1);
    EXPECT_EQ(load_checkpoint(ckpt).step, 3);

    r = run_cli({"invert", "--ckpt", ckpt, "--dataset", ds, "--record", "1", "--lattice", "2", "--iters", "2",
                 "--joint-iters", "1", "--out", path("inv")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const json rep = r.report();
    EXPECT_EQ(rep["latent"].size(), 2u);
    EXPECT_EQ(rep["reference_latent"].size(), 2u);
    EXPECT_TRUE(std::isfinite(rep["psnr"].get<double>()));
    EXPECT_TRUE(fs::exists(path("inv.pfm")));
    EXPECT_TRUE(fs::exists(path("inv.ckpt")));

    EXPECT_EQ(run_cli({"invert", "--ckpt", ckpt, "--dataset", ds, "--record", "9", "--lattice", "2"}).code,
              cli::kExitUsage);
    EXPECT_EQ(run_cli({"distill", "--dataset", ds}).code, cli::kExitUsage);
    EXPECT_EQ(run_cli({"fit", "--dataset", ds}).code, cli::kExitUsage);
}

}  // namespace
}  // namespace primvol
