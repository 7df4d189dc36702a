// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "magcrop/image.hpp"
#include "magcrop/tensor.hpp"

namespace magcrop {

struct TokenGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t count() const noexcept { return rows * cols; }
    friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

/// Last-layer attention between N image tokens and T text tokens, with the loss gradient
/// taken against the same matrix. Both are N x T row-major; heads are already pooled.
class AttentionSlab {
public:
    /// Row sums may exceed 1 by at most this much.
    static constexpr double kRowSumSlack = 1e-4;

    AttentionSlab(std::size_t image_tokens, std::size_t text_tokens, std::vector<float> attn,
                  std::vector<float> grad);

    /// `attn` and `grad` must be rank-2 tensors of equal shape [N, T].
    static AttentionSlab from_tensors(const Tensor& attn, const Tensor& grad);

    std::size_t image_tokens() const noexcept { return m_image_tokens; }
    std::size_t text_tokens() const noexcept { return m_text_tokens; }
    std::span<const float> attn() const noexcept { return m_attn; }
    std::span<const float> grad() const noexcept { return m_grad; }
    float attn(std::size_t i, std::size_t t) const { return m_attn[i * m_text_tokens + t]; }
    float grad(std::size_t i, std::size_t t) const { return m_grad[i * m_text_tokens + t]; }

private:
    std::size_t m_image_tokens;
    std::size_t m_text_tokens;
    std::vector<float> m_attn;
    std::vector<float> m_grad;
};

/// Non-negative saliency over the image-token lattice, row-major.
struct Heatmap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> scores;

    float at(std::size_t r, std::size_t c) const { return scores[r * cols + c]; }
};

/// s_i = (1/T) * sum_t relu(grad[i,t]) * attn[i,t], laid out row-major on `grid` (or on the
/// square lattice when no grid is given).
Heatmap compute_heatmap(const AttentionSlab& slab, std::optional<TokenGrid> grid = std::nullopt);

Tensor heatmap_to_tensor(const Heatmap& h);
/// Rank-2 tensor with non-negative entries.
Heatmap heatmap_from_tensor(const Tensor& t);

/// Min-max normalized 8-bit gray rendering, one pixel per token. A constant heatmap
/// renders black.
ImagePlane render_heatmap(const Heatmap& h);

/// Token rows/cols whose pixel footprint intersects `region`, for an image of
/// `image_width` x `image_height` covered by the heatmap's lattice.
Heatmap crop_heatmap(const Heatmap& h, int image_width, int image_height, const PixelRect& region);

}  // namespace magcrop
