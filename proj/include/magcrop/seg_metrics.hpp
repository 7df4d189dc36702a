// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "magcrop/image.hpp"

namespace magcrop {

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);
    BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return m_width; }
    int height() const noexcept { return m_height; }
    bool at(int x, int y) const { return m_bits[static_cast<std::size_t>(y) * m_width + x] != 0; }
    void set(int x, int y, bool v) { m_bits[static_cast<std::size_t>(y) * m_width + x] = v ? 1 : 0; }
    std::span<const std::uint8_t> bits() const noexcept { return m_bits; }
    std::size_t popcount() const noexcept;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int m_width = 0;
    int m_height = 0;
    std::vector<std::uint8_t> m_bits;  // 0 or 1
};

/// Nonzero in any channel is foreground.
BinaryMask mask_from_image(const ImagePlane& img);
/// Foreground 255, background 0.
ImagePlane mask_to_image(const BinaryMask& m);

struct Overlap {
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;
};

Overlap overlap(const BinaryMask& pred, const BinaryMask& gt);

/// |pred & gt| / |pred | gt|; two empty masks score 1.
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct MetricReport {
    std::size_t n_samples = 0;
    double p_at_50 = 0.0;
    double oiou = 0.0;
    double miou = 0.0;
};

using MaskPair = std::pair<BinaryMask, BinaryMask>;

/// MIoU is the mean per-sample IoU, OIoU the cumulative intersection over cumulative union
/// (1 if every union is empty), P@0.5 the fraction of samples with IoU >= 0.5.
MetricReport evaluate(std::span<const MaskPair> pairs);

/// Word-set IoU after lowercasing and dropping ASCII punctuation.
double siou(std::string_view pred_label, std::string_view gt_label);

std::string format_report(const MetricReport& r);
std::string format_report_json(const MetricReport& r);

}  // namespace magcrop
