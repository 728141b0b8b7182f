// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/dataset.h"

#include <algorithm>
#include <fstream>

#include "primvol/error.h"

namespace primvol {

int MultiViewDataset::latent_dim() const
{
    return has_latents() ? static_cast<int>(records.front().latent->size()) : 0;
}

std::vector<int> MultiViewDataset::samples() const
{
    std::vector<int> out;
    for (const ViewRecord& r : records)
        if (std::find(out.begin(), out.end(), r.sample) == out.end()) out.push_back(r.sample);
    return out;
}

MultiViewDataset MultiViewDataset::subset(int sample) const
{
    MultiViewDataset out;
    out.root = root;
    for (const ViewRecord& r : records)
        if (r.sample == sample) out.records.push_back(r);
    return out;
}

std::filesystem::path MultiViewDataset::image_path(const ViewRecord& r) const
{
    return r.image.is_absolute() ? r.image : root / r.image;
}

ImageBuffer MultiViewDataset::load_image(const ViewRecord& r) const
{
    ImageBuffer img = read_pfm(image_path(r));
    if (img.width() != r.camera.width || img.height() != r.camera.height || img.channels() != 3)
        throw ArgumentError("image " + image_path(r).string() + " does not match its camera resolution");
    return img;
}

void MultiViewDataset::validate() const
{
    if (records.empty()) throw ArgumentError("dataset has no records");
    const bool latents = records.front().latent.has_value();
    const std::size_t dim = latents ? records.front().latent->size() : 0;
    for (const ViewRecord& r : records) {
        r.camera.validate();
        if (r.camera.width != width() || r.camera.height != height())
            throw ArgumentError("dataset images differ in resolution");
        if (r.latent.has_value() != latents) throw ArgumentError("latents must be present on all records or none");
        if (latents && (r.latent->empty() || r.latent->size() != dim))
            throw ArgumentError("dataset latents differ in dimension");
    }
}

nlohmann::json record_to_json(const ViewRecord& r)
{
    nlohmann::json j{{"image", r.image.generic_string()},
                     {"camera", camera_to_json(r.camera)},
                     {"sample", r.sample},
                     {"view", r.view}};
    if (r.latent) j["w"] = *r.latent;
    return j;
}

ViewRecord record_from_json(const nlohmann::json& j)
{
    ViewRecord r;
    try {
        r.image = j.at("image").get<std::string>();
        r.camera = camera_from_json(j.at("camera"));
        r.sample = j.value("sample", 0);
        r.view = j.value("view", 0);
        if (j.contains("w")) r.latent = j.at("w").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed manifest record: ") + e.what());
    }
    return r;
}

void save_manifest(const MultiViewDataset& dataset, const std::filesystem::path& path)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp.string());
        for (const ViewRecord& r : dataset.records) out << record_to_json(r).dump() << '\n';
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

MultiViewDataset load_dataset(const std::filesystem::path& path)
{
    std::filesystem::path manifest = path;
    if (std::filesystem::is_directory(path)) manifest = path / kManifestName;
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot read dataset manifest " + manifest.string());
    MultiViewDataset ds;
    ds.root = manifest.parent_path();
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ArgumentError(manifest.string() + ":" + std::to_string(number) + ": " + e.what());
        }
        ds.records.push_back(record_from_json(j));
    }
    ds.validate();
    return ds;
}

}  // namespace primvol
