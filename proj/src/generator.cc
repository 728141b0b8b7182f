// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/generator.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "primvol/error.h"

namespace primvol {

namespace {

double softplus(double z)
{
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

double sigmoid(double z)
{
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::size_t cells_of(const GeneratorConfig& c)
{
    return static_cast<std::size_t>(c.resolution) * c.resolution * c.resolution;
}

std::vector<double> rgb_input(std::span<const double> w, const Vec3& view_dir)
{
    std::vector<double> in(w.begin(), w.end());
    in.push_back(view_dir.x);
    in.push_back(view_dir.y);
    in.push_back(view_dir.z);
    return in;
}

void check_latent(const Generator& gen, std::span<const double> w)
{
    if (static_cast<int>(w.size()) != gen.config().latent_dim)
        throw ArgumentError("latent has " + std::to_string(w.size()) + " values, generator expects " +
                            std::to_string(gen.config().latent_dim));
}

void check_view(const Vec3& v)
{
    if (!is_finite(v) || std::abs(norm(v) - 1.0) > 1e-6) throw ArgumentError("view direction must be unit");
}

DeltaSet deltas_from(const GeneratorConfig& c, const std::vector<double>& raw)
{
    DeltaSet d = DeltaSet::zeros(c.n_prim);
    for (int k = 0; k < c.n_prim; ++k) {
        const double* r = &raw[static_cast<std::size_t>(k) * 9];
        for (int a = 0; a < 3; ++a) {
            d.translation[k][a] = c.range_t * std::tanh(r[a]);
            d.rotation[k][a] = c.range_r * std::tanh(r[3 + a]);
            d.scale[k][a] = c.range_s * std::tanh(r[6 + a]);
        }
    }
    return d;
}

}  // namespace

void GeneratorConfig::validate() const
{
    if (latent_dim < 1 || n_prim < 1 || resolution < 1) throw ArgumentError("generator sizes must be >= 1");
    if (!(range_t > 0.0) || !(range_s > 0.0) || !(range_r > 0.0))
        throw ArgumentError("generator output ranges must be positive");
    if (!(range_r < std::numbers::pi)) throw ArgumentError("rotation range must be below pi");
    if (!(alpha_init > 0.0)) throw ArgumentError("alpha_init must be positive");
}

nlohmann::json GeneratorConfig::to_json() const
{
    return {{"latent_dim", latent_dim},     {"n_prim", n_prim},       {"M", resolution},
            {"geo_hidden", geo_hidden},     {"alpha_hidden", alpha_hidden},
            {"rgb_hidden", rgb_hidden},     {"range_t", range_t},     {"range_r", range_r},
            {"range_s", range_s},           {"alpha_init", alpha_init}, {"seed", seed}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j)
{
    GeneratorConfig c;
    c.latent_dim = j.at("latent_dim").get<int>();
    c.n_prim = j.at("n_prim").get<int>();
    c.resolution = j.at("M").get<int>();
    c.geo_hidden = j.at("geo_hidden").get<std::vector<int>>();
    c.alpha_hidden = j.at("alpha_hidden").get<std::vector<int>>();
    c.rgb_hidden = j.at("rgb_hidden").get<std::vector<int>>();
    c.range_t = j.at("range_t").get<double>();
    c.range_r = j.at("range_r").get<double>();
    c.range_s = j.at("range_s").get<double>();
    c.alpha_init = j.at("alpha_init").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

Generator::Generator(const GeneratorConfig& config) : config_(config)
{
    config.validate();
    const std::size_t cells = cells_of(config);
    const std::size_t n = static_cast<std::size_t>(config.n_prim);
    geo_ = Mlp({config.latent_dim, config.geo_hidden, static_cast<int>(9 * n)}, 0);
    alpha_ = Mlp({config.latent_dim, config.alpha_hidden, static_cast<int>(cells * n)}, geo_.param_count());
    rgb_ = Mlp({config.latent_dim + 3, config.rgb_hidden, static_cast<int>(3 * cells * n)},
               alpha_.offset() + alpha_.param_count());
    params_.assign(rgb_.offset() + rgb_.param_count(), 0.0);
    std::mt19937_64 rng(config.seed);
    geo_.init(params_, rng, true, 0.0);
    alpha_.init(params_, rng, false, softplus_inverse(config.alpha_init));
    rgb_.init(params_, rng, false, 0.0);
}

DeltaSet geo_forward(const Generator& gen, std::span<const double> w)
{
    check_latent(gen, w);
    return deltas_from(gen.config(), gen.geo().forward(gen.params(), w));
}

std::vector<std::vector<double>> alpha_forward(const Generator& gen, std::span<const double> w)
{
    check_latent(gen, w);
    const std::size_t cells = cells_of(gen.config());
    const MlpTrace t = gen.alpha().forward_hidden(gen.params(), w);
    std::vector<std::vector<double>> out(gen.config().n_prim, std::vector<double>(cells));
    for (std::size_t k = 0; k < out.size(); ++k) {
        gen.alpha().final_layer(gen.params(), t, k * cells, (k + 1) * cells, out[k].data());
        for (double& v : out[k]) v = softplus(v);
    }
    return out;
}

std::vector<std::vector<double>> rgb_forward(const Generator& gen, std::span<const double> w,
                                             const Vec3& view_dir)
{
    check_latent(gen, w);
    check_view(view_dir);
    const std::size_t cells = cells_of(gen.config());
    const std::vector<double> in = rgb_input(w, view_dir);
    const MlpTrace t = gen.rgb().forward_hidden(gen.params(), in);
    std::vector<std::vector<double>> out(gen.config().n_prim, std::vector<double>(3 * cells));
    for (std::size_t k = 0; k < out.size(); ++k) {
        gen.rgb().final_layer(gen.params(), t, 3 * k * cells, 3 * (k + 1) * cells, out[k].data());
        for (double& v : out[k]) v = sigmoid(v);
    }
    return out;
}

GeneratedScene generate_scene(const Generator& gen, const AnchorSet& anchors, std::span<const double> w,
                              const Vec3& view_dir, const Vec3& background)
{
    check_latent(gen, w);
    check_view(view_dir);
    const GeneratorConfig& c = gen.config();
    if (anchors.size() != static_cast<std::size_t>(c.n_prim))
        throw ArgumentError("generator produces " + std::to_string(c.n_prim) + " primitives, anchor set has " +
                            std::to_string(anchors.size()));
    GeneratedScene g;
    g.latent.assign(w.begin(), w.end());
    g.view_dir = view_dir;
    g.geo_trace = gen.geo().forward_hidden(gen.params(), w);
    std::vector<double> raw(9 * static_cast<std::size_t>(c.n_prim));
    gen.geo().final_layer(gen.params(), g.geo_trace, 0, raw.size(), raw.data());
    g.deltas = deltas_from(c, raw);

    const std::size_t cells = cells_of(c);
    g.alpha_trace = gen.alpha().forward_hidden(gen.params(), w);
    g.rgb_trace = gen.rgb().forward_hidden(gen.params(), rgb_input(w, view_dir));
    std::vector<Payload> payloads(c.n_prim);
    for (std::size_t k = 0; k < payloads.size(); ++k) {
        Payload& p = payloads[k];
        p.resolution = c.resolution;
        p.alpha.resize(cells);
        p.rgb.resize(3 * cells);
        gen.alpha().final_layer(gen.params(), g.alpha_trace, k * cells, (k + 1) * cells, p.alpha.data());
        for (double& v : p.alpha) v = softplus(v);
        gen.rgb().final_layer(gen.params(), g.rgb_trace, 3 * k * cells, 3 * (k + 1) * cells, p.rgb.data());
        for (double& v : p.rgb) v = sigmoid(v);
    }
    g.composition = compose(anchors, g.deltas, std::move(payloads), background);
    return g;
}

GeneratorGrads generator_backward(const Generator& gen, const GeneratedScene& generated,
                                  const SceneGrads& scene_grads)
{
    const GeneratorConfig& c = gen.config();
    const PrimitiveSet& scene = generated.scene();
    if (scene_grads.size() != scene.size()) throw ArgumentError("scene gradient count mismatch");
    const std::size_t n = scene.size();
    const std::size_t cells = cells_of(c);

    std::vector<double> d_geo(9 * n);
    std::vector<double> d_alpha(n * cells);
    std::vector<double> d_rgb(3 * n * cells);
    for (std::size_t k = 0; k < n; ++k) {
        const PrimitiveGrads& sg = scene_grads.primitives[k];
        const Vec3& dt = generated.deltas.translation[k];
        const Vec3& dr = generated.deltas.rotation[k];
        const Vec3& ds = generated.deltas.scale[k];
        const Vec3 dr_bar = so3_right_jacobian(dr).transpose() * sg.rotation;
        for (int a = 0; a < 3; ++a) {
            const double ut = dt[a] / c.range_t, ur = dr[a] / c.range_r, us = ds[a] / c.range_s;
            d_geo[9 * k + a] = sg.position[a] * c.range_t * (1.0 - ut * ut);
            d_geo[9 * k + 3 + a] = dr_bar[a] * c.range_r * (1.0 - ur * ur);
            const double s_bar = generated.composition.scale_clamped[k][a] ? 0.0 : sg.scale[a];
            d_geo[9 * k + 6 + a] = s_bar * c.range_s * (1.0 - us * us);
        }
        const Payload& p = scene.primitives[k].payload;
        for (std::size_t i = 0; i < cells; ++i) {
            // softplus'(z) = sigmoid(z) = 1 - exp(-softplus(z))
            d_alpha[k * cells + i] = sg.alpha[i] * -std::expm1(-p.alpha[i]);
        }
        for (std::size_t i = 0; i < 3 * cells; ++i) {
            const double v = p.rgb[i];
            d_rgb[3 * k * cells + i] = sg.rgb[i] * v * (1.0 - v);
        }
    }

    GeneratorGrads out;
    out.params.assign(gen.param_count(), 0.0);
    const std::vector<double> dw_geo = gen.geo().backward(gen.params(), generated.geo_trace, d_geo, out.params);
    const std::vector<double> dw_alpha =
        gen.alpha().backward(gen.params(), generated.alpha_trace, d_alpha, out.params);
    const std::vector<double> dw_rgb = gen.rgb().backward(gen.params(), generated.rgb_trace, d_rgb, out.params);
    out.latent.resize(c.latent_dim);
    for (int i = 0; i < c.latent_dim; ++i) out.latent[i] = dw_geo[i] + dw_alpha[i] + dw_rgb[i];
    return out;
}

double geo_lipschitz_bound(const Generator& gen)
{
    const GeneratorConfig& c = gen.config();
    return std::max({c.range_t, c.range_r, c.range_s}) * gen.geo().lipschitz_bound(gen.params());
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint weight blocks are little-endian; big-endian hosts need byte swapping");

constexpr const char* kCheckpointMagic = "primvol-generator";

void write_block(std::ofstream& out, const std::vector<double>& v)
{
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& v, const std::string& path)
{
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
        throw IoError(path + ": checkpoint weight block is truncated");
}

}  // namespace

void save_checkpoint(const GeneratorCheckpoint& ckpt, const std::filesystem::path& path)
{
    const bool has_adam = !ckpt.adam_m.empty();
    if (has_adam && (ckpt.adam_m.size() != ckpt.generator.param_count() ||
                     ckpt.adam_v.size() != ckpt.generator.param_count()))
        throw ArgumentError("optimizer state does not match the generator parameter count");
    nlohmann::json header{{"format", kCheckpointMagic},
                          {"version", kCheckpointFormatVersion},
                          {"config", ckpt.generator.config().to_json()},
                          {"n_params", ckpt.generator.param_count()},
                          {"step", ckpt.step},
                          {"adam", has_adam},
                          {"adam_steps", ckpt.adam_steps},
                          {"extra", ckpt.extra}};
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << header.dump() << '\n';
        write_block(out, ckpt.generator.params());
        if (has_adam) {
            write_block(out, ckpt.adam_m);
            write_block(out, ckpt.adam_v);
        }
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

GeneratorCheckpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": missing checkpoint header");
    GeneratorCheckpoint ckpt;
    bool has_adam = false;
    try {
        const nlohmann::json header = nlohmann::json::parse(line);
        if (header.value("format", std::string{}) != kCheckpointMagic)
            throw IoError(path.string() + ": not a primvol generator checkpoint");
        if (header.value("version", -1) != kCheckpointFormatVersion)
            throw IoError(path.string() + ": unsupported checkpoint version");
        ckpt.generator = Generator(GeneratorConfig::from_json(header.at("config")));
        if (header.at("n_params").get<std::size_t>() != ckpt.generator.param_count())
            throw IoError(path.string() + ": parameter count does not match the stored layer widths");
        ckpt.step = header.at("step").get<std::int64_t>();
        has_adam = header.at("adam").get<bool>();
        ckpt.adam_steps = header.at("adam_steps").get<std::int64_t>();
        ckpt.extra = header.value("extra", nlohmann::json{});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": malformed checkpoint header: " + e.what());
    }
    read_block(in, ckpt.generator.params(), path.string());
    if (has_adam) {
        ckpt.adam_m.resize(ckpt.generator.param_count());
        ckpt.adam_v.resize(ckpt.generator.param_count());
        read_block(in, ckpt.adam_m, path.string());
        read_block(in, ckpt.adam_v, path.string());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes in checkpoint");
    return ckpt;
}

}  // namespace primvol
