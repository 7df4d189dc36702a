// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "magcrop/config.hpp"
#include "magcrop/granularity.hpp"
#include "magcrop/image.hpp"
#include "magcrop/semantic_crop.hpp"

namespace magcrop {

/// What `adjust` does to an image: Image resizes to target_size^2; Region keeps box 1 sharp
/// over a compressed background; Pixel keeps box 2 sharp, box 1 compressed once and the
/// rest compressed twice.
struct CompositePlan {
    GranularityLabel granularity = GranularityLabel::Image;
    std::vector<CropBox> boxes;
    int target_size = 100;

    /// PlanMismatch unless the box count matches the granularity (0/1/2), boxes lie inside
    /// the image, and box 2 is inside box 1 with strictly smaller area.
    void validate(int width, int height) const;
};

/// Down to (max(1, H/factor) x max(1, W/factor)) by area averaging, back up to H x W
/// bilinearly. Arithmetic in float, one rounding to 8 bits at the end.
ImagePlane compress(const ImagePlane& img, int factor);

/// `base` with the pixels inside `at` replaced by `patch`.
ImagePlane stitch(const ImagePlane& base, const ImagePlane& patch, const PixelRect& at);

ImagePlane adjust(const ImagePlane& img, const CompositePlan& plan, const PipelineConfig& cfg);

/// ceil(height/patch) * ceil(width/patch).
std::size_t token_count(std::size_t width, std::size_t height, std::size_t patch);

/// Fraction of the output kept at full fidelity: target_size^2 / (W*H) capped at 1 for
/// Image, innermost box area / (W*H) otherwise.
double sharp_area_ratio(const CompositePlan& plan, int width, int height);

}  // namespace magcrop
