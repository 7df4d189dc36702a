// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/resample.hpp"

#include <algorithm>
#include <cmath>

#include "magcrop/error.hpp"

namespace magcrop {

namespace {

struct Tap {
    int index;
    double weight;
};

// For each output index, the input indices its footprint overlaps and the overlap weights
// (summing to 1).
std::vector<std::vector<Tap>> area_taps(int src, int dst) {
    std::vector<std::vector<Tap>> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        const double lo = d * scale;
        const double hi = (d + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int s = first; s <= last; ++s) {
            const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
            if (overlap > 0.0) {
                taps[d].push_back({s, overlap / scale});
            }
        }
    }
    return taps;
}

struct LinearTap {
    int i0;
    int i1;
    double frac;
};

std::vector<LinearTap> linear_taps(int src, int dst) {
    std::vector<LinearTap> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        double pos = (d + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(pos));
        const int i1 = std::min(i0 + 1, src - 1);
        taps[d] = {i0, i1, pos - i0};
    }
    return taps;
}

void check_target(int width, int height) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch,
            "resample target must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace

FloatPlane::FloatPlane(int w, int h, int c, float fill)
    : width(w), height(h), channels(c), values(static_cast<std::size_t>(w) * h * c, fill) {}

FloatPlane to_float(const ImagePlane& img) {
    FloatPlane out(img.width(), img.height(), img.channels());
    auto px = img.pixels();
    std::transform(px.begin(), px.end(), out.values.begin(), [](std::uint8_t v) { return static_cast<float>(v); });
    return out;
}

ImagePlane to_u8(const FloatPlane& plane) {
    std::vector<std::uint8_t> px(plane.values.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        // nearbyint honours the default round-to-nearest-even mode.
        const float v = std::nearbyint(plane.values[i]);
        px[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
    }
    return ImagePlane(plane.width, plane.height, plane.channels, std::move(px));
}

FloatPlane resize_area(const FloatPlane& src, int width, int height) {
    check_target(width, height);
    const auto xt = area_taps(src.width, width);
    const auto yt = area_taps(src.height, height);

    FloatPlane horizontal(width, src.height, src.channels);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < src.channels; ++c) {
                double acc = 0.0;
                for (const Tap& t : xt[x]) {
                    acc += t.weight * src.at(t.index, y, c);
                }
                horizontal.at(x, y, c) = static_cast<float>(acc);
            }
        }
    }
    FloatPlane out(width, height, src.channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < src.channels; ++c) {
                double acc = 0.0;
                for (const Tap& t : yt[y]) {
                    acc += t.weight * horizontal.at(x, t.index, c);
                }
                out.at(x, y, c) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

FloatPlane resize_bilinear(const FloatPlane& src, int width, int height) {
    check_target(width, height);
    const auto xt = linear_taps(src.width, width);
    const auto yt = linear_taps(src.height, height);
    FloatPlane out(width, height, src.channels);
    for (int y = 0; y < height; ++y) {
        const LinearTap& ty = yt[y];
        for (int x = 0; x < width; ++x) {
            const LinearTap& tx = xt[x];
            for (int c = 0; c < src.channels; ++c) {
                const double top = src.at(tx.i0, ty.i0, c) + tx.frac * (src.at(tx.i1, ty.i0, c) - src.at(tx.i0, ty.i0, c));
                const double bottom =
                    src.at(tx.i0, ty.i1, c) + tx.frac * (src.at(tx.i1, ty.i1, c) - src.at(tx.i0, ty.i1, c));
                out.at(x, y, c) = static_cast<float>(top + ty.frac * (bottom - top));
            }
        }
    }
    return out;
}

ImagePlane resize_bilinear(const ImagePlane& src, int width, int height) {
    return to_u8(resize_bilinear(to_float(src), width, height));
}

}  // namespace magcrop
