// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "primvol/geom.h"

namespace primvol {

/// Interleaved row-major image with 1, 3, or 4 channels of doubles.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const ImageBuffer& o) const
    {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    std::size_t index(int x, int y, int c) const
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    Vec3 rgb(std::size_t pixel) const
    {
        const double* p = &data_[pixel * channels_];
        return {p[0], p[1], p[2]};
    }
    void set_rgb(std::size_t pixel, const Vec3& v)
    {
        double* p = &data_[pixel * channels_];
        p[0] = v.x;
        p[1] = v.y;
        p[2] = v.z;
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// True when no value is NaN or infinite.
    bool all_finite() const;

    bool operator==(const ImageBuffer&) const = default;

private:
    int width_{0};
    int height_{0};
    int channels_{0};
    std::vector<double> data_;
};

/// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all channels. Throws ArgumentError on shape mismatch.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b);
double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b);
double max_abs_difference(const ImageBuffer& a, const ImageBuffer& b);

/// Linear float32 PFM ("PF" color or "Pf" grayscale). Four-channel images drop alpha.
void write_pfm(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_pfm(const std::filesystem::path& path);

/// 8-bit sRGB-encoded PNG of a 1- or 3-channel linear image, clamped to [0, 1].
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace primvol
