// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/seg_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "magcrop/error.hpp"

namespace magcrop {

namespace {

std::set<std::string> word_set(std::string_view text) {
    std::set<std::string> words;
    std::string current;
    for (unsigned char ch : text) {
        if (std::ispunct(ch)) {
            continue;
        }
        if (std::isspace(ch)) {
            if (!current.empty()) {
                words.insert(std::move(current));
                current.clear();
            }
            continue;
        }
        current.push_back(static_cast<char>(std::tolower(ch)));
    }
    if (!current.empty()) {
        words.insert(std::move(current));
    }
    return words;
}

}  // namespace

BinaryMask::BinaryMask(int width, int height, bool fill)
    : m_width(width), m_height(height),
      m_bits(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill ? 1 : 0) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch, "mask dimensions must be positive");
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : m_width(width), m_height(height), m_bits(std::move(bits)) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch, "mask dimensions must be positive");
    require(m_bits.size() == static_cast<std::size_t>(width) * height, ErrorCode::SizeMismatch,
            "mask buffer does not match its dimensions");
    for (auto& b : m_bits) {
        b = b ? 1 : 0;
    }
}

std::size_t BinaryMask::popcount() const noexcept {
    return static_cast<std::size_t>(std::count(m_bits.begin(), m_bits.end(), std::uint8_t{1}));
}

BinaryMask mask_from_image(const ImagePlane& img) {
    BinaryMask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            bool on = false;
            for (int c = 0; c < img.channels(); ++c) {
                on = on || img.at(x, y, c) != 0;
            }
            m.set(x, y, on);
        }
    }
    return m;
}

ImagePlane mask_to_image(const BinaryMask& m) {
    ImagePlane img(m.width(), m.height(), 1);
    auto px = img.pixels();
    auto bits = m.bits();
    std::transform(bits.begin(), bits.end(), px.begin(), [](std::uint8_t b) { return b ? 255 : 0; });
    return img;
}

Overlap overlap(const BinaryMask& pred, const BinaryMask& gt) {
    require(pred.width() == gt.width() && pred.height() == gt.height(), ErrorCode::SizeMismatch,
            "prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                " vs ground truth " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    Overlap o;
    auto p = pred.bits();
    auto g = gt.bits();
    for (std::size_t i = 0; i < p.size(); ++i) {
        o.intersection += (p[i] & g[i]);
        o.union_ += (p[i] | g[i]);
    }
    return o;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    const Overlap o = overlap(pred, gt);
    return o.union_ == 0 ? 1.0 : static_cast<double>(o.intersection) / static_cast<double>(o.union_);
}

MetricReport evaluate(std::span<const MaskPair> pairs) {
    require(!pairs.empty(), ErrorCode::EmptyEvaluation, "no mask pairs to evaluate");
    std::uint64_t inter = 0;
    std::uint64_t uni = 0;
    double iou_sum = 0.0;
    std::size_t hits = 0;
    for (const auto& [pred, gt] : pairs) {
        const Overlap o = overlap(pred, gt);
        const double sample = o.union_ == 0 ? 1.0 : static_cast<double>(o.intersection) / static_cast<double>(o.union_);
        inter += o.intersection;
        uni += o.union_;
        iou_sum += sample;
        hits += sample >= 0.5 ? 1 : 0;
    }
    MetricReport r;
    r.n_samples = pairs.size();
    r.miou = iou_sum / static_cast<double>(pairs.size());
    r.oiou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    r.p_at_50 = static_cast<double>(hits) / static_cast<double>(pairs.size());
    return r;
}

double siou(std::string_view pred_label, std::string_view gt_label) {
    const auto gt = word_set(gt_label);
    require(!gt.empty(), ErrorCode::EmptyGroundTruth, "ground-truth label has no words");
    const auto pred = word_set(pred_label);
    std::size_t inter = 0;
    for (const auto& w : pred) {
        inter += gt.count(w);
    }
    const std::size_t uni = pred.size() + gt.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string format_report(const MetricReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "samples  %zu\nP@0.5    %.6f\nOIoU     %.6f\nMIoU     %.6f\n", r.n_samples,
                  r.p_at_50, r.oiou, r.miou);
    return buf;
}

std::string format_report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["n_samples"] = r.n_samples;
    j["p_at_50"] = r.p_at_50;
    j["oiou"] = r.oiou;
    j["miou"] = r.miou;
    return j.dump();
}

}  // namespace magcrop
