// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "magcrop/granularity.hpp"
#include "magcrop/params.hpp"
#include "magcrop/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace magcrop;

namespace {

const std::filesystem::path kFixture = std::filesystem::path(MAGCROP_FIXTURE_DIR) / "classifier";

std::vector<float> fixture_embedding() {
    const Tensor t = read_tensor(kFixture / "embedding.magt");
    return {t.data().begin(), t.data().end()};
}

std::vector<double> oracle_logits(const ClassifierWeights& w, const std::vector<float>& e) {
    const std::vector<double> x(e.begin(), e.end());
    const auto h1 = oracle::relu(oracle::affine(w.w1, w.b1, x));
    const auto h2 = oracle::relu(oracle::affine(w.w2, w.b2, h1));
    return oracle::affine(w.w3, w.b3, h2);
}

}  // namespace

TEST(Granularity, ZeroWeightsTieToImage) {
    const Classification c = classify_embedding(std::vector<float>(768, 0.3f), ClassifierWeights::zeros());
    EXPECT_EQ(c.label, GranularityLabel::Image);
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(c.logits[k], 0.0);
        EXPECT_DOUBLE_EQ(c.probabilities[k], 1.0 / 3.0);
    }
}

TEST(Granularity, ShippedFixtureMatchesDenseOracle) {
    const ClassifierWeights w = ClassifierWeights::from_parameters(read_parameter_dir(kFixture));
    const auto e = fixture_embedding();
    const Classification c = classify_embedding(e, w);
    const auto expected = oracle_logits(w, e);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(c.logits[k], expected[k], 1e-5);
    }
    // Frozen from an independent float64 forward pass over the shipped files.
    EXPECT_NEAR(c.logits[0], -0.14021709, 1e-5);
    EXPECT_NEAR(c.logits[1], 0.67528484, 1e-5);
    EXPECT_NEAR(c.logits[2], -0.60360771, 1e-5);
    EXPECT_NEAR(c.probabilities[1], 0.58113769, 1e-6);
    EXPECT_EQ(c.label, GranularityLabel::Region);
}

TEST(Granularity, ShippedFixtureRegenerates) {
    const ParameterSet shipped = read_parameter_dir(kFixture);
    const ParameterSet fresh = synth::make_classifier_weights(2026).to_parameters();
    for (const auto& name : ClassifierWeights::parameter_names()) {
        EXPECT_EQ(shipped.at(name), fresh.at(name)) << name;
    }
    EXPECT_EQ(fixture_embedding(), synth::make_query_embedding(2026));
}

TEST(Granularity, WidthMismatch) {
    expect_error(ErrorCode::ShapeMismatch,
                 [] { classify_embedding(std::vector<float>(767, 0.0f), ClassifierWeights::zeros()); });
    ClassifierWeights w = ClassifierWeights::zeros();
    w.b2.pop_back();
    expect_error(ErrorCode::ShapeMismatch, [&] { w.validate(); });
    w = ClassifierWeights::zeros();
    w.w3[0] = std::numeric_limits<float>::infinity();
    expect_error(ErrorCode::NonFiniteWeight, [&] { w.validate(); });
}

TEST(Granularity, RandomWeightsSoftmaxAndBiasShift) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ClassifierWeights w = synth::make_classifier_weights(seed);
        const auto e = synth::make_query_embedding(seed + 100);
        const Classification c = classify_embedding(e, w);
        const double total = std::accumulate(c.probabilities.begin(), c.probabilities.end(), 0.0);
        EXPECT_NEAR(total, 1.0, 1e-6);
        for (double p : c.probabilities) {
            EXPECT_GT(p, 0.0);
            EXPECT_LT(p, 1.0);
        }
        const auto expected = oracle_logits(w, e);
        const auto oracle_label = std::max_element(expected.begin(), expected.end()) - expected.begin();
        EXPECT_EQ(static_cast<long>(c.label), oracle_label);

        for (float& b : w.b3) {
            b += 3.5f;
        }
        EXPECT_EQ(classify_embedding(e, w).label, c.label);
    }
}

TEST(Granularity, KeywordRules) {
    EXPECT_EQ(classify_keywords("Please segment the red car"), GranularityLabel::Pixel);
    EXPECT_EQ(classify_keywords("Where is the bridge?"), GranularityLabel::Region);
    EXPECT_EQ(classify_keywords("Describe this image."), GranularityLabel::Image);
    EXPECT_EQ(classify_keywords("Draw a BOUNDING BOX around it"), GranularityLabel::Region);
    EXPECT_EQ(classify_keywords("Where should I MASK the ship"), GranularityLabel::Pixel);
    EXPECT_EQ(classify_keywords("COUNT the planes"), classify_keywords("count the planes"));
    expect_error(ErrorCode::EmptyQuery, [] { classify_keywords(""); });
    expect_error(ErrorCode::EmptyQuery, [] { classify_keywords("  \t"); });
}

TEST(Granularity, LabelNames) {
    EXPECT_EQ(to_string(GranularityLabel::Pixel), "pixel");
    EXPECT_EQ(parse_granularity("Region"), GranularityLabel::Region);
    EXPECT_FALSE(parse_granularity("tile").has_value());
}
