// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/granularity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "magcrop/error.hpp"

namespace magcrop {

namespace {

void check_block(const std::vector<float>& v, std::size_t expected, const char* name) {
    require(v.size() == expected, ErrorCode::ShapeMismatch,
            std::string(name) + " holds " + std::to_string(v.size()) + " values, expected " + std::to_string(expected));
    for (float x : v) {
        require(std::isfinite(x), ErrorCode::NonFiniteWeight, std::string(name) + " contains a non-finite weight");
    }
}

// out = W x + b, optionally followed by relu. W is rows x cols, row-major.
std::vector<double> dense(std::span<const float> w, std::span<const float> b, std::span<const double> x,
                          bool relu) {
    const std::size_t rows = b.size();
    const std::size_t cols = x.size();
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const float* row = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += static_cast<double>(row[c]) * x[c];
        }
        out[r] = relu ? std::max(0.0, acc) : acc;
    }
    return out;
}

std::vector<float> flat(const Tensor& t) {
    auto d = t.data();
    return {d.begin(), d.end()};
}

}  // namespace

std::string_view to_string(GranularityLabel g) {
    switch (g) {
    case GranularityLabel::Image: return "image";
    case GranularityLabel::Region: return "region";
    case GranularityLabel::Pixel: return "pixel";
    }
    return "unknown";
}

std::optional<GranularityLabel> parse_granularity(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "image") return GranularityLabel::Image;
    if (lower == "region") return GranularityLabel::Region;
    if (lower == "pixel") return GranularityLabel::Pixel;
    return std::nullopt;
}

void ClassifierWeights::validate() const {
    check_block(w1, kClassifierHidden1 * kQueryEmbeddingWidth, "W1");
    check_block(b1, kClassifierHidden1, "b1");
    check_block(w2, kClassifierHidden2 * kClassifierHidden1, "W2");
    check_block(b2, kClassifierHidden2, "b2");
    check_block(w3, kGranularityClasses * kClassifierHidden2, "W3");
    check_block(b3, kGranularityClasses, "b3");
}

ClassifierWeights ClassifierWeights::zeros() {
    ClassifierWeights w;
    w.w1.assign(kClassifierHidden1 * kQueryEmbeddingWidth, 0.0f);
    w.b1.assign(kClassifierHidden1, 0.0f);
    w.w2.assign(kClassifierHidden2 * kClassifierHidden1, 0.0f);
    w.b2.assign(kClassifierHidden2, 0.0f);
    w.w3.assign(kGranularityClasses * kClassifierHidden2, 0.0f);
    w.b3.assign(kGranularityClasses, 0.0f);
    return w;
}

std::vector<std::string> ClassifierWeights::parameter_names() {
    return {"W1", "b1", "W2", "b2", "W3", "b3"};
}

ClassifierWeights ClassifierWeights::from_parameters(const ParameterSet& params) {
    ClassifierWeights w;
    w.w1 = flat(expect_parameter(params, "W1", {kClassifierHidden1, kQueryEmbeddingWidth}));
    w.b1 = flat(expect_parameter(params, "b1", {kClassifierHidden1}));
    w.w2 = flat(expect_parameter(params, "W2", {kClassifierHidden2, kClassifierHidden1}));
    w.b2 = flat(expect_parameter(params, "b2", {kClassifierHidden2}));
    w.w3 = flat(expect_parameter(params, "W3", {kGranularityClasses, kClassifierHidden2}));
    w.b3 = flat(expect_parameter(params, "b3", {kGranularityClasses}));
    return w;
}

ParameterSet ClassifierWeights::to_parameters() const {
    validate();
    ParameterSet p;
    p.emplace("W1", Tensor({kClassifierHidden1, kQueryEmbeddingWidth}, w1));
    p.emplace("b1", Tensor({kClassifierHidden1}, b1));
    p.emplace("W2", Tensor({kClassifierHidden2, kClassifierHidden1}, w2));
    p.emplace("b2", Tensor({kClassifierHidden2}, b2));
    p.emplace("W3", Tensor({kGranularityClasses, kClassifierHidden2}, w3));
    p.emplace("b3", Tensor({kGranularityClasses}, b3));
    return p;
}

Classification classify_embedding(std::span<const float> embedding, const ClassifierWeights& w) {
    require(embedding.size() == kQueryEmbeddingWidth, ErrorCode::ShapeMismatch,
            "query embedding must be " + std::to_string(kQueryEmbeddingWidth) + " wide, got " +
                std::to_string(embedding.size()));
    for (float v : embedding) {
        require(std::isfinite(v), ErrorCode::NonFiniteElement, "query embedding contains a non-finite value");
    }
    w.validate();

    std::vector<double> x(embedding.begin(), embedding.end());
    auto h1 = dense(w.w1, w.b1, x, true);
    auto h2 = dense(w.w2, w.b2, h1, true);
    auto logits = dense(w.w3, w.b3, h2, false);

    Classification out;
    std::copy(logits.begin(), logits.end(), out.logits.begin());
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < kGranularityClasses; ++k) {
        out.probabilities[k] = std::exp(logits[k] - peak);
        total += out.probabilities[k];
    }
    for (double& p : out.probabilities) {
        p /= total;
    }
    // max_element returns the first maximum, i.e. the coarser label on ties.
    auto best = std::max_element(logits.begin(), logits.end());
    out.label = static_cast<GranularityLabel>(std::distance(logits.begin(), best));
    return out;
}

GranularityLabel classify_keywords(std::string_view query) {
    std::string lower(query);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    require(lower.find_first_not_of(" \t\r\n") != std::string::npos, ErrorCode::EmptyQuery, "query is empty");

    auto contains_any = [&](std::initializer_list<std::string_view> words) {
        return std::any_of(words.begin(), words.end(),
                           [&](std::string_view w) { return lower.find(w) != std::string::npos; });
    };
    if (contains_any({"segment", "mask", "outline", "delineate"})) {
        return GranularityLabel::Pixel;
    }
    if (contains_any({"where", "locate", "count", "bounding box", "which object", "is there", "classify the object"})) {
        return GranularityLabel::Region;
    }
    return GranularityLabel::Image;
}

}  // namespace magcrop
