// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "magcrop/params.hpp"
#include "magcrop/seg_metrics.hpp"
#include "magcrop/tensor.hpp"

namespace magcrop {

inline constexpr std::size_t kSegTokenWidth = 4096;
inline constexpr std::size_t kDecoderWidth = 256;
inline constexpr std::size_t kDefaultProjectionHidden = 1024;

/// N >= 1 segmentation-token hidden states, each 4096 wide, row-major.
class SegTokenSet {
public:
    SegTokenSet(std::size_t count, std::vector<float> values);
    /// Accepts [4096] (one token) or [N, 4096].
    static SegTokenSet from_tensor(const Tensor& t);

    std::size_t count() const noexcept { return m_count; }
    std::span<const float> token(std::size_t n) const;
    Tensor to_tensor() const;

private:
    std::size_t m_count;
    std::vector<float> m_values;
};

/// Two-layer MLP 4096 -> hidden -> 256 with GELU between, row-major (out x in) weights.
struct ProjectionWeights {
    std::size_t hidden = kDefaultProjectionHidden;
    std::vector<float> w1, b1;
    std::vector<float> w2, b2;

    void validate() const;
    static ProjectionWeights zeros(std::size_t hidden = kDefaultProjectionHidden);
    /// Parameters W1 [hidden, 4096], b1 [hidden], W2 [256, hidden], b2 [256]; hidden is read
    /// from W1.
    static ProjectionWeights from_parameters(const ParameterSet& params);
    ParameterSet to_parameters() const;
    static std::vector<std::string> parameter_names();
};

/// 256-channel feature map, channel-major: value(ch, y, x) = values[(ch*height + y)*width + x].
struct FeatureLevel {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;

    /// Accepts a [256, h, w] tensor.
    static FeatureLevel from_tensor(const Tensor& t);
    Tensor to_tensor() const;
    float at(std::size_t ch, std::size_t y, std::size_t x) const { return values[(ch * height + y) * width + x]; }
};

/// Levels ordered coarse to fine; each level strictly larger than the previous in both axes.
class FeaturePyramid {
public:
    explicit FeaturePyramid(std::vector<FeatureLevel> levels);

    std::size_t size() const noexcept { return m_levels.size(); }
    const FeatureLevel& level(std::size_t l) const { return m_levels.at(l); }
    const std::vector<FeatureLevel>& levels() const noexcept { return m_levels; }

private:
    std::vector<FeatureLevel> m_levels;
};

/// Per-level soft mask, row-major, values in [0,1].
struct MaskPlane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<float> values;

    float at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

struct FusedMask {
    MaskPlane mask;
    double threshold = 0.5;

    /// value >= threshold is foreground.
    BinaryMask binarize() const;
};

double gelu(double x);
double sigmoid(double x);

std::vector<float> project_token(std::span<const float> token, const ProjectionWeights& w);

/// sum_n beta_n * projected[n].
std::vector<float> fuse_tokens(std::span<const std::vector<float>> projected, std::span<const double> beta);

/// Any decoder must be a pure function of (query, level) returning values in [0,1] at the
/// requested output size.
using MaskDecoder =
    std::function<MaskPlane(std::span<const float> query, const FeatureLevel& level, std::size_t out_width,
                            std::size_t out_height)>;

/// sigmoid(<q, f[:, y, x]> / sqrt(256)) at level resolution, then bilinear to the output size.
MaskPlane decode_reference(std::span<const float> query, const FeatureLevel& level, std::size_t out_width,
                           std::size_t out_height);

/// sum_l omega_l * levels[l], accumulated in level order.
FusedMask fuse_masks(std::span<const MaskPlane> levels, std::span<const double> omega, double threshold = 0.5);

/// Full mask path: project every token, fuse with beta, decode every pyramid level at the
/// output size, fuse with omega.
FusedMask generate_mask(const SegTokenSet& tokens, const ProjectionWeights& projection, const FeaturePyramid& pyramid,
                        std::span<const double> beta, std::span<const double> omega, std::size_t out_width,
                        std::size_t out_height, double threshold = 0.5,
                        const MaskDecoder& decoder = decode_reference);

Tensor mask_to_tensor(const MaskPlane& m);

}  // namespace magcrop
