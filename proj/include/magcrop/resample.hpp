// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "magcrop/image.hpp"

namespace magcrop {

/// Float raster with the same layout as ImagePlane (row-major, channels interleaved).
struct FloatPlane {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> values;

    FloatPlane() = default;
    FloatPlane(int w, int h, int c, float fill = 0.0f);

    float at(int x, int y, int c = 0) const { return values[index(x, y, c)]; }
    float& at(int x, int y, int c = 0) { return values[index(x, y, c)]; }

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
};

FloatPlane to_float(const ImagePlane& img);
/// Rounds half-to-even and clamps to [0, 255].
ImagePlane to_u8(const FloatPlane& plane);

/// Box-filter resampling: each output pixel is the overlap-weighted mean of the input
/// pixels its footprint covers. Exact block mean for integer downscale factors.
FloatPlane resize_area(const FloatPlane& src, int width, int height);

/// Bilinear resampling with pixel centers at +0.5 and edge clamping.
FloatPlane resize_bilinear(const FloatPlane& src, int width, int height);

ImagePlane resize_bilinear(const ImagePlane& src, int width, int height);

}  // namespace magcrop
