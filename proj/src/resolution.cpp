// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/resolution.hpp"

#include <algorithm>
#include <cstring>

#include "magcrop/error.hpp"
#include "magcrop/resample.hpp"

namespace magcrop {

void CompositePlan::validate(int width, int height) const {
    const std::size_t expected = static_cast<std::size_t>(granularity);
    require(boxes.size() == expected, ErrorCode::PlanMismatch,
            std::string(to_string(granularity)) + " granularity needs " + std::to_string(expected) + " boxes, got " +
                std::to_string(boxes.size()));
    require(target_size >= 1, ErrorCode::PlanMismatch, "target_size must be positive");
    for (const CropBox& b : boxes) {
        require(b.rect.within(width, height), ErrorCode::PlanMismatch,
                "box " + to_string(b.rect) + " outside " + std::to_string(width) + "x" + std::to_string(height));
    }
    if (boxes.size() == 2) {
        require(boxes[0].rect.contains(boxes[1].rect) && boxes[1].rect.area() < boxes[0].rect.area(),
                ErrorCode::PlanMismatch,
                "box 2 " + to_string(boxes[1].rect) + " must lie strictly inside box 1 " + to_string(boxes[0].rect));
    }
}

ImagePlane compress(const ImagePlane& img, int factor) {
    require(factor >= 2, ErrorCode::InvalidConfig, "compression factor must be >= 2");
    require(img.width() >= factor && img.height() >= factor, ErrorCode::ImageTooSmall,
            std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image is smaller than factor " +
                std::to_string(factor));
    const int small_w = std::max(1, img.width() / factor);
    const int small_h = std::max(1, img.height() / factor);
    FloatPlane small = resize_area(to_float(img), small_w, small_h);
    return to_u8(resize_bilinear(small, img.width(), img.height()));
}

ImagePlane stitch(const ImagePlane& base, const ImagePlane& patch, const PixelRect& at) {
    require(at.within(base.width(), base.height()), ErrorCode::BoxOutOfBounds,
            "stitch box " + to_string(at) + " outside " + std::to_string(base.width()) + "x" +
                std::to_string(base.height()));
    require(patch.channels() == base.channels() && patch.width() == at.width() && patch.height() == at.height(),
            ErrorCode::SizeMismatch,
            "patch " + std::to_string(patch.width()) + "x" + std::to_string(patch.height()) + "x" +
                std::to_string(patch.channels()) + " does not fit box " + to_string(at));
    ImagePlane out = base;
    const std::size_t row_bytes = static_cast<std::size_t>(at.width()) * base.channels();
    for (int y = 0; y < at.height(); ++y) {
        const std::size_t src = static_cast<std::size_t>(y) * row_bytes;
        std::memcpy(&out.at(at.x0, at.y0 + y), patch.pixels().data() + src, row_bytes);
    }
    return out;
}

ImagePlane adjust(const ImagePlane& img, const CompositePlan& plan, const PipelineConfig& cfg) {
    plan.validate(img.width(), img.height());
    const int factor = cfg.compression_factor;
    switch (plan.granularity) {
    case GranularityLabel::Image:
        return resize_bilinear(img, plan.target_size, plan.target_size);
    case GranularityLabel::Region: {
        const PixelRect& box1 = plan.boxes[0].rect;
        return stitch(compress(img, factor), crop(img, box1), box1);
    }
    case GranularityLabel::Pixel: {
        const PixelRect& box1 = plan.boxes[0].rect;
        const PixelRect& box2 = plan.boxes[1].rect;
        // Right-to-left: D(D(I)) is the base, D(C1) goes over it, C2 goes on top.
        ImagePlane out = compress(compress(img, factor), factor);
        out = stitch(out, compress(crop(img, box1), factor), box1);
        return stitch(out, crop(img, box2), box2);
    }
    }
    fail(ErrorCode::InvariantViolation, "unhandled granularity");
}

std::size_t token_count(std::size_t width, std::size_t height, std::size_t patch) {
    require(patch >= 1, ErrorCode::InvalidConfig, "patch size must be >= 1");
    return ((height + patch - 1) / patch) * ((width + patch - 1) / patch);
}

double sharp_area_ratio(const CompositePlan& plan, int width, int height) {
    plan.validate(width, height);
    const double total = static_cast<double>(width) * height;
    switch (plan.granularity) {
    case GranularityLabel::Image:
        return std::min(1.0, static_cast<double>(plan.target_size) * plan.target_size / total);
    case GranularityLabel::Region:
        return static_cast<double>(plan.boxes[0].rect.area()) / total;
    case GranularityLabel::Pixel:
        return static_cast<double>(plan.boxes[1].rect.area()) / total;
    }
    return 0.0;
}

}  // namespace magcrop
