// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "primvol/camera.h"
#include "primvol/image.h"

namespace primvol {

struct ViewRecord {
    Camera camera;
    std::filesystem::path image;  // absolute, or relative to the manifest directory
    std::optional<std::vector<double>> latent;
    int sample{0};
    int view{0};
};

/// Posed images, optionally paired with the latent code that produced them.
struct MultiViewDataset {
    std::filesystem::path root;
    std::vector<ViewRecord> records;

    std::size_t size() const { return records.size(); }
    bool has_latents() const { return !records.empty() && records.front().latent.has_value(); }
    int latent_dim() const;
    int width() const { return records.empty() ? 0 : records.front().camera.width; }
    int height() const { return records.empty() ? 0 : records.front().camera.height; }
    /// Distinct sample ids in first-seen order.
    std::vector<int> samples() const;
    /// Records of one sample, in manifest order.
    MultiViewDataset subset(int sample) const;
    std::filesystem::path image_path(const ViewRecord& r) const;
    ImageBuffer load_image(const ViewRecord& r) const;

    /// Non-empty, one resolution, latents all present with one size or all absent.
    /// Throws ArgumentError.
    void validate() const;
};

/// One JSON object per line: {"image", "camera", "w"?, "sample", "view"}.
nlohmann::json record_to_json(const ViewRecord& r);
ViewRecord record_from_json(const nlohmann::json& j);

void save_manifest(const MultiViewDataset& dataset, const std::filesystem::path& path);
/// Accepts the manifest file or a directory holding manifest.jsonl. Throws IoError when
/// unreadable and ArgumentError when a line is malformed or the dataset is invalid.
MultiViewDataset load_dataset(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.jsonl";

}  // namespace primvol
