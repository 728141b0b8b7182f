// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "primvol/scene.h"

namespace primvol {

namespace {

static_assert(std::endian::native == std::endian::little,
              "scene payload block is little-endian; big-endian hosts need byte swapping");

constexpr const char* kSceneMagic = "primvol-scene";

nlohmann::json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

Vec3 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void write_doubles(std::ofstream& out, const std::vector<double>& v)
{
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, const std::string& path)
{
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
        throw SceneError(SceneError::Kind::Corrupt, path + ": payload block is truncated");
}

}  // namespace

void save_scene(const PrimitiveSet& scene, const std::filesystem::path& path)
{
    scene.validate();
    const int m = scene.primitives.front().payload.resolution;
    nlohmann::json header;
    header["format"] = kSceneMagic;
    header["version"] = kSceneFormatVersion;
    header["n_prim"] = scene.size();
    header["M"] = m;
    header["background"] = vec_json(scene.background);
    auto& prims = header["primitives"] = nlohmann::json::array();
    for (const Primitive& p : scene.primitives) {
        const Rotation& r = p.rotation;
        prims.push_back({{"t", vec_json(p.position)},
                         {"q", {r.w(), r.x(), r.y(), r.z()}},
                         {"s", vec_json(p.scale)}});
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw SceneError(SceneError::Kind::Io, "cannot open " + path.string() + " for writing");
    out << header.dump() << '\n';
    for (const Primitive& p : scene.primitives) {
        write_doubles(out, p.payload.rgb);
        write_doubles(out, p.payload.alpha);
    }
    if (!out) throw SceneError(SceneError::Kind::Io, "failed writing " + path.string());
}

PrimitiveSet load_scene(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SceneError(SceneError::Kind::Io, "cannot open scene " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": missing header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": unreadable header: " + e.what());
    }
    if (header.value("format", std::string{}) != kSceneMagic)
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": not a primvol scene file");
    const int version = header.value("version", -1);
    if (version != kSceneFormatVersion)
        throw SceneError(SceneError::Kind::Version, path.string() + ": unsupported scene format version " +
                                                        std::to_string(version));

    PrimitiveSet scene;
    try {
        const auto n = header.at("n_prim").get<std::size_t>();
        const int m = header.at("M").get<int>();
        const auto& prims = header.at("primitives");
        if (m < 1 || prims.size() != n)
            throw SceneError(SceneError::Kind::Corrupt, path.string() + ": inconsistent header");
        scene.background = vec_from(header.at("background"));
        scene.primitives.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            Primitive& p = scene.primitives[k];
            const auto& q = prims[k].at("q");
            p.position = vec_from(prims[k].at("t"));
            p.rotation = Rotation::from_stored(q.at(0).get<double>(), q.at(1).get<double>(),
                                               q.at(2).get<double>(), q.at(3).get<double>());
            p.scale = vec_from(prims[k].at("s"));
            p.payload = Payload(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": malformed header: " + e.what());
    }

    for (Primitive& p : scene.primitives) {
        read_doubles(in, p.payload.rgb, path.string());
        read_doubles(in, p.payload.alpha, path.string());
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": trailing bytes after payload block");
    try {
        scene.validate();
    } catch (const std::invalid_argument& e) {
        throw SceneError(SceneError::Kind::Corrupt, path.string() + ": " + e.what());
    }
    return scene;
}

}  // namespace primvol
