// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/mask_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "magcrop/config.hpp"
#include "magcrop/error.hpp"
#include "magcrop/resample.hpp"

namespace magcrop {

namespace {

void check_finite(std::span<const float> v, const std::string& what) {
    for (float x : v) {
        require(std::isfinite(x), ErrorCode::NonFiniteWeight, what + " contains a non-finite value");
    }
}

void check_weights(std::span<const double> w, std::size_t expected, const char* name) {
    require(w.size() == expected, ErrorCode::WeightCountMismatch,
            std::string(name) + " has " + std::to_string(w.size()) + " weights for " + std::to_string(expected) +
                " inputs");
    require(weights_normalized({w.begin(), w.end()}), ErrorCode::WeightsNotNormalized,
            std::string(name) + " weights must be non-negative and sum to 1 within 1e-6");
}

std::vector<float> flat(const Tensor& t) {
    auto d = t.data();
    return {d.begin(), d.end()};
}

}  // namespace

SegTokenSet::SegTokenSet(std::size_t count, std::vector<float> values) : m_count(count), m_values(std::move(values)) {
    require(count >= 1, ErrorCode::ShapeMismatch, "at least one segmentation token is required");
    require(m_values.size() == count * kSegTokenWidth, ErrorCode::ShapeMismatch,
            "segmentation tokens must be " + std::to_string(kSegTokenWidth) + " wide");
    for (float v : m_values) {
        require(std::isfinite(v), ErrorCode::NonFiniteElement, "segmentation token contains a non-finite value");
    }
}

SegTokenSet SegTokenSet::from_tensor(const Tensor& t) {
    if (t.rank() == 1) {
        require(t.dim(0) == kSegTokenWidth, ErrorCode::ShapeMismatch,
                "segmentation token width " + std::to_string(t.dim(0)) + " != " + std::to_string(kSegTokenWidth));
        return SegTokenSet(1, flat(t));
    }
    require(t.rank() == 2 && t.dim(1) == kSegTokenWidth, ErrorCode::ShapeMismatch,
            "segmentation tokens must be [N, 4096], got " + shape_to_string(t.shape()));
    return SegTokenSet(t.dim(0), flat(t));
}

std::span<const float> SegTokenSet::token(std::size_t n) const {
    require(n < m_count, ErrorCode::ShapeMismatch, "token index out of range");
    return std::span<const float>(m_values).subspan(n * kSegTokenWidth, kSegTokenWidth);
}

Tensor SegTokenSet::to_tensor() const {
    return Tensor({m_count, kSegTokenWidth}, m_values);
}

void ProjectionWeights::validate() const {
    require(hidden >= 1, ErrorCode::ShapeMismatch, "projection hidden width must be >= 1");
    require(w1.size() == hidden * kSegTokenWidth && b1.size() == hidden, ErrorCode::ShapeMismatch,
            "projection layer 1 must be [" + std::to_string(hidden) + ", 4096]");
    require(w2.size() == kDecoderWidth * hidden && b2.size() == kDecoderWidth, ErrorCode::ShapeMismatch,
            "projection layer 2 must be [256, " + std::to_string(hidden) + "]");
    check_finite(w1, "W1");
    check_finite(b1, "b1");
    check_finite(w2, "W2");
    check_finite(b2, "b2");
}

ProjectionWeights ProjectionWeights::zeros(std::size_t hidden) {
    ProjectionWeights w;
    w.hidden = hidden;
    w.w1.assign(hidden * kSegTokenWidth, 0.0f);
    w.b1.assign(hidden, 0.0f);
    w.w2.assign(kDecoderWidth * hidden, 0.0f);
    w.b2.assign(kDecoderWidth, 0.0f);
    return w;
}

std::vector<std::string> ProjectionWeights::parameter_names() {
    return {"W1", "b1", "W2", "b2"};
}

ProjectionWeights ProjectionWeights::from_parameters(const ParameterSet& params) {
    auto it = params.find("W1");
    require(it != params.end(), ErrorCode::MissingInput, "missing parameter W1");
    require(it->second.rank() == 2, ErrorCode::ShapeMismatch, "W1 must be rank 2");
    ProjectionWeights w;
    w.hidden = it->second.dim(0);
    w.w1 = flat(expect_parameter(params, "W1", {w.hidden, kSegTokenWidth}));
    w.b1 = flat(expect_parameter(params, "b1", {w.hidden}));
    w.w2 = flat(expect_parameter(params, "W2", {kDecoderWidth, w.hidden}));
    w.b2 = flat(expect_parameter(params, "b2", {kDecoderWidth}));
    return w;
}

ParameterSet ProjectionWeights::to_parameters() const {
    validate();
    ParameterSet p;
    p.emplace("W1", Tensor({hidden, kSegTokenWidth}, w1));
    p.emplace("b1", Tensor({hidden}, b1));
    p.emplace("W2", Tensor({kDecoderWidth, hidden}, w2));
    p.emplace("b2", Tensor({kDecoderWidth}, b2));
    return p;
}

FeatureLevel FeatureLevel::from_tensor(const Tensor& t) {
    require(t.rank() == 3 && t.dim(0) == kDecoderWidth, ErrorCode::ShapeMismatch,
            "feature level must be [256, h, w], got " + shape_to_string(t.shape()));
    return FeatureLevel{t.dim(1), t.dim(2), flat(t)};
}

Tensor FeatureLevel::to_tensor() const {
    return Tensor({kDecoderWidth, height, width}, values);
}

FeaturePyramid::FeaturePyramid(std::vector<FeatureLevel> levels) : m_levels(std::move(levels)) {
    require(!m_levels.empty(), ErrorCode::ShapeMismatch, "feature pyramid needs at least one level");
    for (std::size_t l = 0; l < m_levels.size(); ++l) {
        const FeatureLevel& f = m_levels[l];
        require(f.height > 0 && f.width > 0 && f.values.size() == kDecoderWidth * f.height * f.width,
                ErrorCode::ShapeMismatch, "feature level " + std::to_string(l) + " is not [256, h, w]");
        if (l > 0) {
            const FeatureLevel& prev = m_levels[l - 1];
            require(f.height > prev.height && f.width > prev.width, ErrorCode::ShapeMismatch,
                    "feature levels must grow strictly from coarse to fine");
        }
    }
}

BinaryMask FusedMask::binarize() const {
    std::vector<std::uint8_t> bits(mask.values.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = mask.values[i] >= threshold ? 1 : 0;
    }
    return BinaryMask(static_cast<int>(mask.width), static_cast<int>(mask.height), std::move(bits));
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

std::vector<float> project_token(std::span<const float> token, const ProjectionWeights& w) {
    require(token.size() == kSegTokenWidth, ErrorCode::ShapeMismatch,
            "segmentation token width " + std::to_string(token.size()) + " != " + std::to_string(kSegTokenWidth));
    w.validate();
    std::vector<double> hidden(w.hidden);
    for (std::size_t h = 0; h < w.hidden; ++h) {
        double acc = w.b1[h];
        const float* row = w.w1.data() + h * kSegTokenWidth;
        for (std::size_t k = 0; k < kSegTokenWidth; ++k) {
            acc += static_cast<double>(row[k]) * token[k];
        }
        hidden[h] = gelu(acc);
    }
    std::vector<float> out(kDecoderWidth);
    for (std::size_t o = 0; o < kDecoderWidth; ++o) {
        double acc = w.b2[o];
        const float* row = w.w2.data() + o * w.hidden;
        for (std::size_t h = 0; h < w.hidden; ++h) {
            acc += static_cast<double>(row[h]) * hidden[h];
        }
        out[o] = static_cast<float>(acc);
    }
    return out;
}

std::vector<float> fuse_tokens(std::span<const std::vector<float>> projected, std::span<const double> beta) {
    check_weights(beta, projected.size(), "beta");
    for (const auto& p : projected) {
        require(p.size() == kDecoderWidth, ErrorCode::ShapeMismatch, "projected tokens must be 256 wide");
    }
    std::vector<float> out(kDecoderWidth);
    for (std::size_t k = 0; k < kDecoderWidth; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < projected.size(); ++n) {
            acc += beta[n] * projected[n][k];
        }
        out[k] = static_cast<float>(acc);
    }
    return out;
}

MaskPlane decode_reference(std::span<const float> query, const FeatureLevel& level, std::size_t out_width,
                           std::size_t out_height) {
    require(query.size() == kDecoderWidth, ErrorCode::ShapeMismatch, "decoder query must be 256 wide");
    require(level.values.size() == kDecoderWidth * level.height * level.width && level.height > 0 && level.width > 0,
            ErrorCode::ShapeMismatch, "feature level is not [256, h, w]");
    require(out_width > 0 && out_height > 0, ErrorCode::ShapeMismatch, "decoder output size must be positive");

    const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(kDecoderWidth));
    FloatPlane logits(static_cast<int>(level.width), static_cast<int>(level.height), 1);
    for (std::size_t y = 0; y < level.height; ++y) {
        for (std::size_t x = 0; x < level.width; ++x) {
            double dot = 0.0;
            for (std::size_t ch = 0; ch < kDecoderWidth; ++ch) {
                dot += static_cast<double>(query[ch]) * level.at(ch, y, x);
            }
            logits.at(static_cast<int>(x), static_cast<int>(y)) = static_cast<float>(sigmoid(dot * inv_sqrt_dim));
        }
    }
    FloatPlane up = (out_width == level.width && out_height == level.height)
                        ? std::move(logits)
                        : resize_bilinear(logits, static_cast<int>(out_width), static_cast<int>(out_height));
    MaskPlane m{out_width, out_height, std::move(up.values)};
    for (float& v : m.values) {
        v = std::clamp(v, 0.0f, 1.0f);
    }
    return m;
}

FusedMask fuse_masks(std::span<const MaskPlane> levels, std::span<const double> omega, double threshold) {
    check_weights(omega, levels.size(), "omega");
    const std::size_t w = levels.front().width;
    const std::size_t h = levels.front().height;
    for (const MaskPlane& m : levels) {
        require(m.width == w && m.height == h && m.values.size() == w * h, ErrorCode::SizeMismatch,
                "mask levels must share output dimensions");
    }
    MaskPlane out{w, h, std::vector<float>(w * h)};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double acc = 0.0;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            acc += omega[l] * levels[l].values[i];
        }
        out.values[i] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
    return FusedMask{std::move(out), threshold};
}

FusedMask generate_mask(const SegTokenSet& tokens, const ProjectionWeights& projection, const FeaturePyramid& pyramid,
                        std::span<const double> beta, std::span<const double> omega, std::size_t out_width,
                        std::size_t out_height, double threshold, const MaskDecoder& decoder) {
    std::vector<std::vector<float>> projected;
    projected.reserve(tokens.count());
    for (std::size_t n = 0; n < tokens.count(); ++n) {
        projected.push_back(project_token(tokens.token(n), projection));
    }
    const std::vector<float> query = fuse_tokens(projected, beta);

    std::vector<MaskPlane> levels;
    levels.reserve(pyramid.size());
    for (const FeatureLevel& f : pyramid.levels()) {
        MaskPlane m = decoder(query, f, out_width, out_height);
        require(m.width == out_width && m.height == out_height, ErrorCode::InvariantViolation,
                "decoder returned the wrong output size");
        for (float v : m.values) {
            require(v >= 0.0f && v <= 1.0f, ErrorCode::InvariantViolation, "decoder output outside [0,1]");
        }
        levels.push_back(std::move(m));
    }
    return fuse_masks(levels, omega, threshold);
}

Tensor mask_to_tensor(const MaskPlane& m) {
    return Tensor({m.height, m.width}, m.values);
}

}  // namespace magcrop
