// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "magcrop/semantic_crop.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace magcrop;

namespace {

Heatmap grid_heatmap(std::size_t n, const std::vector<double>& v) {
    Heatmap h{n, n, {}};
    for (double x : v) {
        h.scores.push_back(static_cast<float>(x));
    }
    return h;
}

std::vector<double> random_grid(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n * n);
    for (double& x : v) {
        // Round through float so the oracle sees exactly what the heatmap stores.
        x = static_cast<float>(u(rng));
    }
    return v;
}

}  // namespace

TEST(SemanticCrop, CandidateCounts) {
    Heatmap h{8, 8, std::vector<float>(64, 1.0f)};
    EXPECT_EQ(generate_candidates(h, GridSpec(8, {1})).size(), 64u);
    const auto all = generate_candidates(h, GridSpec(8, {3, 1, 2, 2}));
    ASSERT_EQ(all.size(), 149u);
    EXPECT_EQ(all.front(), (CellBox{0, 0, 1}));
    EXPECT_EQ(all[64], (CellBox{0, 0, 2}));
    EXPECT_EQ(all[65], (CellBox{0, 1, 2}));
    EXPECT_EQ(all.back(), (CellBox{5, 5, 3}));
}

TEST(SemanticCrop, GridSpecValidation) {
    expect_error(ErrorCode::InvalidGrid, [] { GridSpec(8, {9}); });
    expect_error(ErrorCode::InvalidGrid, [] { GridSpec(8, {0}); });
    expect_error(ErrorCode::InvalidGrid, [] { GridSpec(1, {1}); });
    expect_error(ErrorCode::InvalidGrid, [] { GridSpec(8, {}); });
    EXPECT_EQ(GridSpec(8, {3, 1, 3}).scales(), (std::vector<std::size_t>{1, 3}));
}

TEST(SemanticCrop, HeatmapTooSmall) {
    Heatmap h{7, 9, std::vector<float>(63, 1.0f)};
    expect_error(ErrorCode::HeatmapTooSmall, [&] { generate_candidates(h, GridSpec()); });
}

TEST(SemanticCrop, PoolingAveragesBlocks) {
    // 16x16 heatmap, value = row index; each 2x2 block averages to 2r + 0.5.
    Heatmap h{16, 16, {}};
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            h.scores.push_back(static_cast<float>(r));
        }
    }
    const CellGrid g = pool_heatmap(h, 8);
    for (std::size_t r = 0; r < 8; ++r) {
        EXPECT_DOUBLE_EQ(g.at(r, 5), 2.0 * r + 0.5);
    }
}

TEST(SemanticCrop, UniformGridScoresZeroAndPicksOrigin) {
    const Heatmap h{40, 40, std::vector<float>(1600, 0.37f)};
    const CellGrid g = pool_heatmap(h, 8);
    for (const CellBox& b : enumerate_candidates(8, std::vector<std::size_t>{1, 2, 3})) {
        EXPECT_EQ(score_candidate(g, b), 0.0);
    }
    const CropBox box = select_box(h, GridSpec(), 800, 800);
    EXPECT_EQ(box.rect, (PixelRect{0, 0, 100, 100}));
    EXPECT_EQ(box.score, 0.0);
    EXPECT_EQ(box.stage, 1);
}

TEST(SemanticCrop, SingleHotCell) {
    std::vector<double> v(64, 0.0);
    v[2 * 8 + 3] = 1.0;
    const Heatmap h = grid_heatmap(8, v);
    const CellGrid g = pool_heatmap(h, 8);
    EXPECT_EQ(score_candidate(g, {2, 3, 1}), 1.0);
    for (const CellBox& b : enumerate_candidates(8, std::vector<std::size_t>{1, 2, 3})) {
        // Strict among 1x1 boxes; larger boxes holding the hot cell tie at 1 and lose on size.
        if (b.size == 1 && !(b == CellBox{2, 3, 1})) {
            EXPECT_LT(score_candidate(g, b), 1.0);
        } else {
            EXPECT_LE(score_candidate(g, b), 1.0);
        }
    }
    const CropBox box = select_box(h, GridSpec(), 800, 800);
    EXPECT_EQ(box.rect, (PixelRect{300, 200, 400, 300}));
    EXPECT_EQ(box.score, 1.0);
}

TEST(SemanticCrop, CornerBoxWithoutNeighboursScoresZero) {
    const CellGrid g{2, {5, 1, 1, 1}};
    EXPECT_EQ(score_candidate(g, {0, 0, 2}), 0.0);
    EXPECT_DOUBLE_EQ(score_candidate(g, {0, 0, 1}), 4.0);
}

TEST(SemanticCrop, ScoresMatchBruteForce) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = random_grid(rng, 8);
        const CellGrid g{8, v};
        for (const CellBox& b : enumerate_candidates(8, std::vector<std::size_t>{1, 2, 3})) {
            ASSERT_NEAR(score_candidate(g, b), oracle::contrast_score(v, 8, {b.row, b.col, b.size}), 1e-12);
        }
    }
}

TEST(SemanticCrop, SelectionMatchesExhaustiveArgmax) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = random_grid(rng, 8);
        const auto [expected, score] = oracle::best_box(v, 8, {1, 2, 3});
        const CropBox box = select_box(grid_heatmap(8, v), GridSpec(), 800, 800);
        const PixelRect want{static_cast<int>(expected.col * 100), static_cast<int>(expected.row * 100),
                             static_cast<int>((expected.col + expected.size) * 100),
                             static_cast<int>((expected.row + expected.size) * 100)};
        ASSERT_EQ(box.rect, want) << "trial " << trial;
        ASSERT_NEAR(box.score, score, 1e-12);
    }
}

TEST(SemanticCrop, TieBreakPrefersSmallerThenTopThenLeft) {
    // Two identical hot cells: the top-left one wins.
    std::vector<double> v(64, 0.0);
    v[5 * 8 + 6] = 1.0;
    v[5 * 8 + 1] = 1.0;
    v[1 * 8 + 6] = 1.0;
    const CropBox box = select_box(grid_heatmap(8, v), GridSpec(), 800, 800);
    EXPECT_EQ(box.rect, (PixelRect{600, 100, 700, 200}));
}

TEST(SemanticCrop, ScaleInvariance) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto v = random_grid(rng, 8);
        const CropBox base = select_box(grid_heatmap(8, v), GridSpec(), 640, 480);
        for (double c : {0.25, 2.0, 1024.0}) {
            std::vector<double> scaled = v;
            for (double& x : scaled) {
                x *= c;
            }
            EXPECT_EQ(select_box(grid_heatmap(8, scaled), GridSpec(), 640, 480).rect, base.rect);
        }
    }
}

TEST(SemanticCrop, OutwardRounding) {
    // 8 cells over 100 px: cell 1 spans [12.5, 25) and rounds out to [12, 25).
    EXPECT_EQ(cell_box_to_pixels({1, 1, 1}, 8, PixelRect{0, 0, 100, 100}), (PixelRect{12, 12, 25, 25}));
    EXPECT_EQ(cell_box_to_pixels({0, 0, 1}, 8, PixelRect{200, 300, 300, 400}), (PixelRect{200, 300, 213, 313}));
}

TEST(SemanticCrop, ParentStageIsSmallerAndAbsolute) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto v = random_grid(rng, 8);
        const CropBox parent = select_box(grid_heatmap(8, v), GridSpec(), 800, 600);
        const auto v2 = random_grid(rng, 8);
        const CropBox child = select_box(grid_heatmap(8, v2), GridSpec(), 800, 600, parent);
        EXPECT_EQ(child.stage, 2);
        EXPECT_TRUE(parent.rect.contains(child.rect));
        EXPECT_LT(child.rect.area(), parent.rect.area());
    }
}

TEST(SemanticCrop, ParentErrors) {
    const Heatmap h{8, 8, std::vector<float>(64, 1.0f)};
    const CropBox parent{PixelRect{0, 0, 400, 400}, 1, 0.0};
    expect_error(ErrorCode::ParentTooSmall, [&] { select_box(h, GridSpec(8, {8}), 800, 800, parent); });
    const CropBox outside{PixelRect{500, 500, 900, 900}, 1, 0.0};
    expect_error(ErrorCode::BoxOutOfBounds, [&] { select_box(h, GridSpec(), 800, 800, outside); });
}
