// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "primvol/error.h"
#include "primvol/image.h"

namespace primvol {

namespace {

static_assert(std::endian::native == std::endian::little, "PFM writer assumes little-endian host");

double srgb_encode(double linear)
{
    const double c = std::clamp(linear, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const ImageBuffer& image)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const int out_channels = image.channels() == 1 ? 1 : 3;
    out << (out_channels == 1 ? "Pf" : "PF") << "\n"
        << image.width() << " " << image.height() << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(image.width()) * out_channels);
    // PFM scanlines run bottom to top.
    for (int y = image.height() - 1; y >= 0; --y) {
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < out_channels; ++c)
                row[static_cast<std::size_t>(x) * out_channels + c] =
                    static_cast<float>(image.at(x, y, c));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("failed writing " + path.string());
}

ImageBuffer read_pfm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || (magic != "PF" && magic != "Pf") || width < 1 || height < 1 || scale == 0.0)
        throw IoError(path.string() + ": not a PFM file");
    if (scale > 0.0) throw IoError(path.string() + ": big-endian PFM is not supported");
    const int channels = magic == "PF" ? 3 : 1;
    ImageBuffer image(width, height, channels);
    std::vector<float> row(static_cast<std::size_t>(width) * channels);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) throw IoError(path.string() + ": truncated PFM data");
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                image.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c];
    }
    return image;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image)
{
    const int channels = image.channels() == 1 ? 1 : 3;
    std::vector<png_byte> pixels(image.pixel_count() * channels);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < channels; ++c)
                pixels[(static_cast<std::size_t>(y) * image.width() + x) * channels + c] =
                    static_cast<png_byte>(std::lround(255.0 * srgb_encode(image.at(x, y, c))));

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string message = png.message;
        png_image_free(&png);
        throw IoError("cannot write " + path.string() + ": " + message);
    }
}

}  // namespace primvol
