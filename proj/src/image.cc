// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include "primvol/image.h"

#include <algorithm>
#include <cmath>

#include "primvol/error.h"

namespace primvol {

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels)
{
    if (width < 1 || height < 1) throw ArgumentError("image dimensions must be positive");
    if (channels != 1 && channels != 3 && channels != 4)
        throw ArgumentError("image channels must be 1, 3 or 4");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

bool ImageBuffer::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what)
{
    if (!a.same_shape(b))
        throw ArgumentError(std::string(what) + ": image shapes differ");
}

}  // namespace

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b)
{
    require_same_shape(a, b, "mean_squared_error");
    const auto da = a.data();
    const auto db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        sum += d * d;
    }
    return sum / static_cast<double>(da.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b)
{
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

double mean_abs_difference(const ImageBuffer& a, const ImageBuffer& b)
{
    require_same_shape(a, b, "mean_abs_difference");
    const auto da = a.data();
    const auto db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) sum += std::abs(da[i] - db[i]);
    return sum / static_cast<double>(da.size());
}

double max_abs_difference(const ImageBuffer& a, const ImageBuffer& b)
{
    require_same_shape(a, b, "max_abs_difference");
    const auto da = a.data();
    const auto db = b.data();
    double m = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
    return m;
}

}  // namespace primvol
