// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "magcrop/params.hpp"

namespace magcrop {

/// Task granularity. The declaration order is the tie-break order.
enum class GranularityLabel { Image = 0, Region = 1, Pixel = 2 };

std::string_view to_string(GranularityLabel g);
std::optional<GranularityLabel> parse_granularity(std::string_view text);

inline constexpr std::size_t kQueryEmbeddingWidth = 768;
inline constexpr std::size_t kClassifierHidden1 = 256;
inline constexpr std::size_t kClassifierHidden2 = 128;
inline constexpr std::size_t kGranularityClasses = 3;

/// Feedforward head 768 -> 256 -> 128 -> 3, row-major weights (out x in).
struct ClassifierWeights {
    std::vector<float> w1, b1;
    std::vector<float> w2, b2;
    std::vector<float> w3, b3;

    /// ShapeMismatch / NonFiniteWeight on bad shapes or values.
    void validate() const;

    static ClassifierWeights zeros();
    /// Expects parameters W1, b1, W2, b2, W3, b3.
    static ClassifierWeights from_parameters(const ParameterSet& params);
    ParameterSet to_parameters() const;
    static std::vector<std::string> parameter_names();
};

struct Classification {
    GranularityLabel label = GranularityLabel::Image;
    std::array<double, 3> logits{};
    std::array<double, 3> probabilities{};
};

/// logits = W3 relu(W2 relu(W1 e + b1) + b2) + b3, softmax, argmax with ties going to the
/// coarser label.
Classification classify_embedding(std::span<const float> embedding, const ClassifierWeights& w);

/// Keyword fallback used when no embedding is available. Case-insensitive substring rules,
/// first match wins: segment/mask/outline/delineate -> Pixel; where/locate/count/
/// "bounding box"/"which object"/"is there"/"classify the object" -> Region; else Image.
GranularityLabel classify_keywords(std::string_view query);

}  // namespace magcrop
