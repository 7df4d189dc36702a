// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "magcrop/heatmap.hpp"
#include "magcrop/mask_fusion.hpp"
#include "magcrop/pipeline.hpp"
#include "magcrop/seg_metrics.hpp"
#include "magcrop/synthetic.hpp"
#include "test_util.hpp"

using namespace magcrop;
using namespace magcrop::synth;

namespace {

SceneSpec one_rect(int cx, int cy, int w, int h) {
    SceneSpec spec;
    spec.seed = 17;
    spec.targets.push_back({TargetShape::Rectangle, cx, cy, w, h, 230});
    return spec;
}

std::vector<float> planted_query(std::uint64_t seed) {
    CounterRng rng(seed, 99);
    std::vector<float> q(kDecoderWidth);
    for (float& v : q) {
        v = static_cast<float>(rng.normal());
    }
    return q;
}

// Level-resolution ground truth: a cell is on when at least half its pixels are target.
BinaryMask coverage_mask(const BinaryMask& full, std::size_t lw, std::size_t lh) {
    const int bw = full.width() / static_cast<int>(lw);
    const int bh = full.height() / static_cast<int>(lh);
    BinaryMask out(static_cast<int>(lw), static_cast<int>(lh));
    for (int cy = 0; cy < static_cast<int>(lh); ++cy) {
        for (int cx = 0; cx < static_cast<int>(lw); ++cx) {
            int hits = 0;
            for (int y = cy * bh; y < (cy + 1) * bh; ++y) {
                for (int x = cx * bw; x < (cx + 1) * bw; ++x) {
                    hits += full.at(x, y) ? 1 : 0;
                }
            }
            out.set(cx, cy, 2 * hits >= bw * bh);
        }
    }
    return out;
}

}  // namespace

TEST(CounterRngTest, DeterministicAndSplittable) {
    CounterRng a(5), b(5);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(a.next(), b.next());
    }
    EXPECT_EQ(CounterRng(5).at(3), CounterRng(5).at(3));
    EXPECT_NE(CounterRng(5).at(3), CounterRng(6).at(3));
    EXPECT_NE(CounterRng(5, 1).at(0), CounterRng(5, 2).at(0));
    CounterRng u(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        const long long k = u.uniform_int(-3, 3);
        ASSERT_GE(k, -3);
        ASSERT_LE(k, 3);
    }
}

TEST(RenderScene, CentredRectangleArea) {
    const Scene s = render_scene(one_rect(400, 400, 100, 100));
    ASSERT_EQ(s.masks.size(), 1u);
    EXPECT_EQ(s.masks[0].popcount(), 10000u);
    EXPECT_EQ(s.image.at(400, 400), 230);
    EXPECT_TRUE(s.masks[0].at(350, 350));
    EXPECT_FALSE(s.masks[0].at(349, 350));
}

TEST(RenderScene, Deterministic) {
    SceneSpec spec = one_rect(300, 200, 90, 60);
    spec.targets.push_back({TargetShape::Gaussian, 500, 500, 120, 80, 250});
    const Scene a = render_scene(spec);
    const Scene b = render_scene(spec);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.masks, b.masks);
    spec.seed = 18;
    EXPECT_NE(render_scene(spec).image, a.image);
}

TEST(RenderScene, OverlapIsGeometricIntersection) {
    SceneSpec spec;
    spec.width = 200;
    spec.height = 160;
    spec.targets.push_back({TargetShape::Rectangle, 80, 70, 60, 40, 200});   // [50,110) x [50,90)
    spec.targets.push_back({TargetShape::Rectangle, 110, 90, 50, 60, 220});  // [85,135) x [60,120)
    const Scene s = render_scene(spec);
    std::size_t both = 0;
    for (int y = 0; y < 160; ++y) {
        for (int x = 0; x < 200; ++x) {
            const bool in = s.masks[0].at(x, y) && s.masks[1].at(x, y);
            both += in;
            EXPECT_EQ(in, x >= 85 && x < 110 && y >= 60 && y < 90);
        }
    }
    EXPECT_EQ(both, 25u * 30u);
}

TEST(RenderScene, GaussianCoversInscribedEllipse) {
    SceneSpec spec;
    spec.width = 100;
    spec.height = 100;
    spec.targets.push_back({TargetShape::Gaussian, 50, 50, 40, 40, 255});
    const BinaryMask m = target_mask(spec, 0);
    EXPECT_TRUE(m.at(50, 50));
    EXPECT_FALSE(m.at(30, 30));
    EXPECT_NEAR(static_cast<double>(m.popcount()), M_PI * 400.0, 40.0);
}

TEST(RenderScene, Validation) {
    expect_error(ErrorCode::TargetOutOfBounds, [] { render_scene(one_rect(790, 400, 100, 100)); });
    SceneSpec noisy = one_rect(400, 400, 10, 10);
    noisy.noise_floor = 0.2;
    expect_error(ErrorCode::InvalidConfig, [&] { noisy.validate(); });
    expect_error(ErrorCode::TargetOutOfBounds, [] { target_mask(SceneSpec{}, 0); });
}

TEST(SceneSpecFile, RoundTrip) {
    SceneSpec spec = one_rect(300, 200, 90, 60);
    spec.targets.push_back({TargetShape::Gaussian, 500, 500, 120, 80, 250});
    spec.noise_floor = 0.05;
    spec.feature_noise = 0.1;
    spec.seed = 123456789012345ULL;
    const SceneSpec back = parse_scene_spec(parse_key_values(format_scene_spec(spec)));
    EXPECT_EQ(format_scene_spec(back), format_scene_spec(spec));
    expect_error(ErrorCode::InvalidConfig, [] { parse_scene_spec(parse_key_values("target = star 1 2 3 4 5")); });
}

TEST(AttentionFor, OnePatchTargetGivesOneHotHeatmap) {
    // 40x40 tokens of 20 px; the target fills exactly token (7, 12).
    const SceneSpec spec = one_rect(12 * 20 + 10, 7 * 20 + 10, 20, 20);
    const Heatmap h = compute_heatmap(attention_for(spec, 0, {40, 40}, 6), TokenGrid{40, 40});
    for (std::size_t r = 0; r < 40; ++r) {
        for (std::size_t c = 0; c < 40; ++c) {
            if (r == 7 && c == 12) {
                EXPECT_GT(h.at(r, c), 0.0f);
            } else {
                EXPECT_EQ(h.at(r, c), 0.0f);
            }
        }
    }
}

TEST(AttentionFor, NoTargetIsUniform) {
    SceneSpec spec;
    spec.noise_floor = 0.03;
    const Heatmap h = compute_heatmap(attention_for(spec, std::nullopt, {20, 20}, 4), TokenGrid{20, 20});
    for (float v : h.scores) {
        EXPECT_EQ(v, h.scores[0]);
    }
    EXPECT_GT(h.scores[0], 0.0f);
}

TEST(AttentionFor, ValidSlabAndBadGrid) {
    SceneSpec spec = one_rect(400, 400, 100, 100);
    spec.noise_floor = 0.1;
    const AttentionSlab slab = attention_for(spec, 0, {40, 40}, 8);
    for (float g : slab.grad()) {
        EXPECT_EQ(g, 1.0f);
    }
    expect_error(ErrorCode::BadGrid, [&] { attention_for(spec, 0, {33, 40}, 8); });
    expect_error(ErrorCode::BadGrid, [&] { attention_for(spec, 0, {10, 10}, 8, PixelRect{0, 0, 95, 100}); });
}

TEST(AttentionFor, ArgmaxInsideTargetOverManySeeds) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SceneSpec spec = random_single_target_scene(seed);
        const Heatmap h = compute_heatmap(attention_for(spec, 0, {40, 40}, 8), TokenGrid{40, 40});
        const auto best = std::max_element(h.scores.begin(), h.scores.end()) - h.scores.begin();
        const int r = static_cast<int>(best) / 40;
        const int c = static_cast<int>(best) % 40;
        const PixelRect patch{c * 20, r * 20, c * 20 + 20, r * 20 + 20};
        const PixelRect fp = spec.targets[0].footprint();
        EXPECT_TRUE(patch.x0 < fp.x1 && fp.x0 < patch.x1 && patch.y0 < fp.y1 && fp.y0 < patch.y1) << "seed " << seed;
    }
}

TEST(FeaturesFor, NoiselessRecoveryIsExactAtLevelResolution) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneSpec spec = random_single_target_scene(seed);
        const auto q = planted_query(seed);
        const auto shapes = default_pyramid_shapes(spec.width, spec.height);
        const FeaturePyramid pyr = features_for(spec, 0, q, shapes);
        const BinaryMask truth = target_mask(spec, 0);
        for (const FeatureLevel& f : pyr.levels()) {
            const BinaryMask got = FusedMask{decode_reference(q, f, f.width, f.height), 0.5}.binarize();
            EXPECT_EQ(iou(got, coverage_mask(truth, f.width, f.height)), 1.0) << "seed " << seed << " level " << f.width;
        }
    }
}

TEST(FeaturesFor, TenPercentNoiseStillRecovers) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SceneSpec spec = random_single_target_scene(seed);
        spec.feature_noise = 0.1;
        const auto q = planted_query(seed);
        const auto shapes = default_pyramid_shapes(spec.width, spec.height);
        const FeaturePyramid pyr = features_for(spec, 0, q, std::span(shapes).last(1));
        const FeatureLevel& fine = pyr.levels().back();
        const BinaryMask got = FusedMask{decode_reference(q, fine, fine.width, fine.height), 0.5}.binarize();
        EXPECT_GE(iou(got, coverage_mask(target_mask(spec, 0), fine.width, fine.height)), 0.95) << "seed " << seed;
    }
}

TEST(FeaturesFor, OrthogonalQuerySeesOneHalf) {
    // The noise is orthogonal to q only, so an equal-norm orthogonal query still picks
    // up part of it; the 0.01 band holds up to roughly 1% noise.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneSpec spec = random_single_target_scene(seed);
        spec.feature_noise = seed % 2 == 0 ? 0.0 : 0.01;
        const auto q = planted_query(seed);
        // Gram-Schmidt a second random direction against q, keeping q's norm.
        auto other = planted_query(seed + 1000);
        double qq = 0.0, qo = 0.0, oo = 0.0;
        for (std::size_t k = 0; k < kDecoderWidth; ++k) {
            qq += static_cast<double>(q[k]) * q[k];
            qo += static_cast<double>(q[k]) * other[k];
        }
        for (std::size_t k = 0; k < kDecoderWidth; ++k) {
            other[k] = static_cast<float>(other[k] - qo / qq * q[k]);
            oo += static_cast<double>(other[k]) * other[k];
        }
        for (float& v : other) {
            v = static_cast<float>(v * std::sqrt(qq / oo));
        }
        const auto shapes = default_pyramid_shapes(spec.width, spec.height);
        const FeaturePyramid pyr = features_for(spec, 0, q, shapes);
        float worst = 0.0f;
        for (const FeatureLevel& f : pyr.levels()) {
            for (float v : decode_reference(other, f, f.width, f.height).values) {
                worst = std::max(worst, std::abs(v - 0.5f));
            }
        }
        EXPECT_LE(worst, 0.01f) << "seed " << seed;
    }
}

TEST(EndToEnd, SyntheticPixelPipelineRecoversMask) {
    int good = 0;
    std::string misses;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        PipelineInputs in;
        in.synthetic = random_single_target_scene(seed);
        in.query = "segment the target";
        const PipelineRun run = run_pipeline(PipelineConfig{}, in);
        ASSERT_TRUE(run.mask.has_value());
        const double score = iou(run.mask->binarize(), target_mask(*in.synthetic, 0));
        if (score >= 0.9) {
            ++good;
        } else {
            misses += " " + std::to_string(seed);
        }
    }
    EXPECT_GE(good, 95) << "seeds below 0.9:" << misses;
}
