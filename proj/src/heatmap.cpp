// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "magcrop/error.hpp"

namespace magcrop {

AttentionSlab::AttentionSlab(std::size_t image_tokens, std::size_t text_tokens, std::vector<float> attn,
                             std::vector<float> grad)
    : m_image_tokens(image_tokens), m_text_tokens(text_tokens), m_attn(std::move(attn)), m_grad(std::move(grad)) {
    require(image_tokens > 0 && text_tokens > 0, ErrorCode::ShapeMismatch, "attention slab needs N, T >= 1");
    const std::size_t n = image_tokens * text_tokens;
    require(m_attn.size() == n && m_grad.size() == n, ErrorCode::ShapeMismatch,
            "attention and gradient must both hold N*T = " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < image_tokens; ++i) {
        double row = 0.0;
        for (std::size_t t = 0; t < text_tokens; ++t) {
            const float a = m_attn[i * text_tokens + t];
            const float g = m_grad[i * text_tokens + t];
            require(std::isfinite(a) && std::isfinite(g), ErrorCode::NonFiniteElement,
                    "non-finite entry in image token row " + std::to_string(i));
            require(a >= 0.0f && a <= 1.0f, ErrorCode::InvalidAttention,
                    "attention outside [0,1] in image token row " + std::to_string(i));
            row += a;
        }
        require(row <= 1.0 + kRowSumSlack, ErrorCode::InvalidAttention,
                "attention row " + std::to_string(i) + " sums to " + std::to_string(row));
    }
}

AttentionSlab AttentionSlab::from_tensors(const Tensor& attn, const Tensor& grad) {
    require(attn.rank() == 2, ErrorCode::ShapeMismatch, "attention tensor must be [N, T], got " +
                                                            shape_to_string(attn.shape()));
    require(grad.shape() == attn.shape(), ErrorCode::ShapeMismatch,
            "gradient shape " + shape_to_string(grad.shape()) + " differs from attention shape " +
                shape_to_string(attn.shape()));
    auto a = attn.data();
    auto g = grad.data();
    return AttentionSlab(attn.dim(0), attn.dim(1), {a.begin(), a.end()}, {g.begin(), g.end()});
}

Heatmap compute_heatmap(const AttentionSlab& slab, std::optional<TokenGrid> grid) {
    const std::size_t n = slab.image_tokens();
    const std::size_t t_count = slab.text_tokens();
    if (grid) {
        require(grid->count() == n, ErrorCode::ShapeMismatch,
                "grid " + std::to_string(grid->rows) + "x" + std::to_string(grid->cols) + " does not hold " +
                    std::to_string(n) + " image tokens");
    } else {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
        require(side * side == n, ErrorCode::NotAGrid,
                std::to_string(n) + " image tokens is not a perfect square; pass an explicit grid");
        grid = TokenGrid{side, side};
    }

    Heatmap h{grid->rows, grid->cols, std::vector<float>(n)};
    auto attn = slab.attn();
    auto grad = slab.grad();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < t_count; ++t) {
            const std::size_t k = i * t_count + t;
            acc += std::max(0.0, static_cast<double>(grad[k])) * attn[k];
        }
        h.scores[i] = static_cast<float>(acc / static_cast<double>(t_count));
    }
    return h;
}

Tensor heatmap_to_tensor(const Heatmap& h) {
    return Tensor({h.rows, h.cols}, h.scores);
}

Heatmap heatmap_from_tensor(const Tensor& t) {
    require(t.rank() == 2, ErrorCode::ShapeMismatch, "heatmap tensor must be rank 2, got " + shape_to_string(t.shape()));
    auto d = t.data();
    for (float v : d) {
        require(v >= 0.0f, ErrorCode::InvalidAttention, "heatmap scores must be non-negative");
    }
    return Heatmap{t.dim(0), t.dim(1), {d.begin(), d.end()}};
}

ImagePlane render_heatmap(const Heatmap& h) {
    const auto [lo, hi] = std::minmax_element(h.scores.begin(), h.scores.end());
    const double range = static_cast<double>(*hi) - *lo;
    ImagePlane img(static_cast<int>(h.cols), static_cast<int>(h.rows), 1);
    auto px = img.pixels();
    for (std::size_t i = 0; i < h.scores.size(); ++i) {
        const double v = range > 0.0 ? (h.scores[i] - *lo) / range * 255.0 : 0.0;
        px[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
    }
    return img;
}

Heatmap crop_heatmap(const Heatmap& h, int image_width, int image_height, const PixelRect& region) {
    require(region.within(image_width, image_height), ErrorCode::BoxOutOfBounds,
            "region " + to_string(region) + " outside image");
    // Token k covers pixels [k*size/count, (k+1)*size/count).
    auto span_of = [](int lo, int hi, int size, std::size_t count) {
        const auto c = static_cast<long long>(count);
        std::size_t first = static_cast<std::size_t>(static_cast<long long>(lo) * c / size);
        std::size_t last = static_cast<std::size_t>((static_cast<long long>(hi) * c + size - 1) / size);
        return std::pair{first, std::min(last, count)};
    };
    const auto [r0, r1] = span_of(region.y0, region.y1, image_height, h.rows);
    const auto [c0, c1] = span_of(region.x0, region.x1, image_width, h.cols);

    Heatmap out{r1 - r0, c1 - c0, {}};
    out.scores.reserve(out.rows * out.cols);
    for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) {
            out.scores.push_back(h.at(r, c));
        }
    }
    return out;
}

}  // namespace magcrop
