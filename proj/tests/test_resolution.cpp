// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "magcrop/resample.hpp"
#include "magcrop/resolution.hpp"
#include "magcrop/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace magcrop;

namespace {

ImagePlane random_gray(std::mt19937_64& rng, int w, int h) {
    std::uniform_int_distribution<int> px(0, 255);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
    for (auto& b : buf) {
        b = static_cast<std::uint8_t>(px(rng));
    }
    return ImagePlane(w, h, 1, std::move(buf));
}

// Straight-line compress: block mean, per-pixel bilinear, half-to-even rounding.
std::vector<std::uint8_t> oracle_compress(const ImagePlane& img, int factor) {
    std::vector<double> src(img.pixels().begin(), img.pixels().end());
    const auto small = oracle::block_mean(src, img.width(), img.height(), factor);
    const auto up = oracle::bilinear(small, img.width() / factor, img.height() / factor, img.width(), img.height());
    std::vector<std::uint8_t> out;
    for (double v : up) {
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0)));
    }
    return out;
}

std::vector<std::uint8_t> bytes(const ImagePlane& img) { return {img.pixels().begin(), img.pixels().end()}; }

ImagePlane synthetic_scene() {
    synth::SceneSpec spec;
    spec.width = 640;
    spec.height = 480;
    spec.seed = 42;
    spec.targets.push_back({synth::TargetShape::Gaussian, 300, 200, 120, 90, 250});
    spec.targets.push_back({synth::TargetShape::Rectangle, 500, 380, 60, 40, 200});
    return synth::render_scene(spec).image;
}

// Checks every pixel of `out` against the three-region rule.
void expect_three_regions(const ImagePlane& img, const ImagePlane& out, const PixelRect& box1,
                          const std::optional<PixelRect>& box2, int factor) {
    ASSERT_EQ(out.width(), img.width());
    ASSERT_EQ(out.height(), img.height());
    const ImagePlane middle = compress(crop(img, box1), factor);
    const ImagePlane outer = box2 ? compress(compress(img, factor), factor) : compress(img, factor);
    std::size_t inner_count = 0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                const PixelRect& sharp = box2 ? *box2 : box1;
                std::uint8_t want;
                if (sharp.contains(x, y)) {
                    want = img.at(x, y, c);
                    ++inner_count;
                } else if (box2 && box1.contains(x, y)) {
                    want = middle.at(x - box1.x0, y - box1.y0, c);
                } else {
                    want = outer.at(x, y, c);
                }
                ASSERT_EQ(out.at(x, y, c), want) << "pixel " << x << "," << y;
            }
        }
    }
    EXPECT_GT(inner_count, 0u);
}

}  // namespace

TEST(Compress, ConstantImageUnchanged) {
    const ImagePlane img(37, 23, 3, 141);
    EXPECT_EQ(compress(img, 4), img);
    EXPECT_EQ(compress(img, 5), img);
}

TEST(Compress, KeepsDimensionsAndIntermediateIsQuarter) {
    std::mt19937_64 rng(1);
    const ImagePlane img = random_gray(rng, 400, 400);
    const ImagePlane out = compress(img, 4);
    EXPECT_EQ(out.width(), 400);
    EXPECT_EQ(out.height(), 400);
    const FloatPlane small = resize_area(to_float(img), 100, 100);
    EXPECT_EQ(small.width, 100);
    EXPECT_EQ(to_u8(resize_bilinear(small, 400, 400)), out);
}

TEST(Compress, CheckerboardMatchesOracle) {
    std::vector<std::uint8_t> px(64);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            px[y * 8 + x] = ((x + y) % 2) ? 255 : 0;
        }
    }
    const ImagePlane board(8, 8, 1, px);
    const ImagePlane out = compress(board, 4);
    EXPECT_EQ(bytes(out), oracle_compress(board, 4));
    // Each 4x4 block averages 127.5, which rounds half-to-even to 128.
    EXPECT_EQ(bytes(out), std::vector<std::uint8_t>(64, 128));
    EXPECT_EQ(oracle::total_variation(px, 8, 8), 28560);
    EXPECT_LT(oracle::total_variation(bytes(out), 8, 8), 28560);
}

TEST(Compress, RandomImagesMatchOracleExactly) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> blocks(1, 12);
        const int w = 4 * blocks(rng);
        const int h = 4 * blocks(rng);
        const ImagePlane img = random_gray(rng, w, h);
        ASSERT_EQ(bytes(compress(img, 4)), oracle_compress(img, 4)) << w << "x" << h;
    }
    const ImagePlane img = random_gray(rng, 30, 18);
    EXPECT_EQ(bytes(compress(img, 3)), oracle_compress(img, 3));
}

TEST(Compress, RangeAndSmoothnessProperties) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> dim(4, 90);
        const ImagePlane img = random_gray(rng, dim(rng), dim(rng));
        const ImagePlane once = compress(img, 4);
        const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
        for (std::uint8_t v : once.pixels()) {
            ASSERT_GE(v, *lo);
            ASSERT_LE(v, *hi);
        }
        if (once.width() >= 4 && once.height() >= 4) {
            const ImagePlane twice = compress(once, 4);
            EXPECT_LE(oracle::total_variation(bytes(twice), img.width(), img.height()),
                      oracle::total_variation(bytes(once), img.width(), img.height()));
        }
    }
}

TEST(Compress, Errors) {
    expect_error(ErrorCode::ImageTooSmall, [] { compress(ImagePlane(3, 8, 1), 4); });
    expect_error(ErrorCode::InvalidConfig, [] { compress(ImagePlane(8, 8, 1), 1); });
}

TEST(Stitch, IdentityAndFullReplacement) {
    std::mt19937_64 rng(4);
    const ImagePlane base = random_gray(rng, 50, 40);
    const PixelRect box{10, 5, 30, 25};
    EXPECT_EQ(stitch(base, crop(base, box), box), base);
    const ImagePlane patch = random_gray(rng, 50, 40);
    EXPECT_EQ(stitch(base, patch, base.bounds()), patch);
}

TEST(Stitch, ChangesExactlyTheBox) {
    const ImagePlane base = compress(ImagePlane(400, 400, 1, 90), 4);
    const ImagePlane patch(100, 100, 1, 200);
    const PixelRect box{100, 100, 200, 200};
    const ImagePlane out = stitch(base, patch, box);
    std::size_t changed = 0;
    for (int y = 0; y < 400; ++y) {
        for (int x = 0; x < 400; ++x) {
            if (out.at(x, y) != base.at(x, y)) {
                ++changed;
                EXPECT_TRUE(box.contains(x, y));
            }
        }
    }
    EXPECT_EQ(changed, 10000u);
}

TEST(Stitch, Errors) {
    const ImagePlane base(20, 20, 3);
    expect_error(ErrorCode::BoxOutOfBounds, [&] { stitch(base, ImagePlane(10, 10, 3), PixelRect{15, 15, 25, 25}); });
    expect_error(ErrorCode::SizeMismatch, [&] { stitch(base, ImagePlane(10, 9, 3), PixelRect{0, 0, 10, 10}); });
    expect_error(ErrorCode::SizeMismatch, [&] { stitch(base, ImagePlane(10, 10, 1), PixelRect{0, 0, 10, 10}); });
}

TEST(Adjust, ImageGranularityIsTargetSquare) {
    std::mt19937_64 rng(5);
    const ImagePlane img = random_gray(rng, 1600, 1600);
    const ImagePlane out = adjust(img, CompositePlan{GranularityLabel::Image, {}, 100}, PipelineConfig{});
    EXPECT_EQ(out.width(), 100);
    EXPECT_EQ(out.height(), 100);
    const ImagePlane wide = adjust(ImagePlane(300, 120, 3, 7), CompositePlan{GranularityLabel::Image, {}, 64}, {});
    EXPECT_EQ(wide, ImagePlane(64, 64, 3, 7));
}

TEST(Adjust, RegionWithWholeImageIsIdentity) {
    const ImagePlane img = synthetic_scene();
    const CompositePlan plan{GranularityLabel::Region, {CropBox{img.bounds(), 1, 0.0}}, 100};
    EXPECT_EQ(adjust(img, plan, PipelineConfig{}), img);
}

TEST(Adjust, RegionThreeRegionOracle) {
    const ImagePlane img = synthetic_scene();
    const PixelRect box1{240, 120, 400, 280};
    expect_three_regions(img, adjust(img, {GranularityLabel::Region, {CropBox{box1, 1, 0.0}}, 100}, {}), box1,
                         std::nullopt, 4);
}

TEST(Adjust, PixelThreeRegionOracle) {
    const ImagePlane img = synthetic_scene();
    const PixelRect box1{160, 80, 480, 400};
    const PixelRect box2{240, 160, 360, 280};
    const CompositePlan plan{GranularityLabel::Pixel, {CropBox{box1, 1, 0.0}, CropBox{box2, 2, 0.0}}, 100};
    expect_three_regions(img, adjust(img, plan, {}), box1, box2, 4);

    PipelineConfig cfg;
    cfg.compression_factor = 2;
    const ImagePlane rgb = adjust(ImagePlane(64, 48, 3, 40), {GranularityLabel::Pixel,
                                                              {CropBox{{8, 8, 40, 40}, 1, 0}, CropBox{{10, 12, 20, 22}, 2, 0}},
                                                              100},
                                  cfg);
    EXPECT_EQ(rgb, ImagePlane(64, 48, 3, 40));
}

TEST(Adjust, PlanValidation) {
    const ImagePlane img(100, 100, 1);
    expect_error(ErrorCode::PlanMismatch, [&] { adjust(img, {GranularityLabel::Region, {}, 100}, {}); });
    expect_error(ErrorCode::PlanMismatch, [&] {
        adjust(img, {GranularityLabel::Pixel, {CropBox{{0, 0, 50, 50}, 1, 0}, CropBox{{40, 40, 60, 60}, 2, 0}}, 100},
               {});
    });
    expect_error(ErrorCode::PlanMismatch,
                 [&] { adjust(img, {GranularityLabel::Region, {CropBox{{0, 0, 150, 50}, 1, 0}}, 100}, {}); });
}

TEST(TokenBudget, Counts) {
    EXPECT_EQ(token_count(1600, 1600, 20), 6400u);
    EXPECT_EQ(token_count(100, 100, 20), 25u);
    EXPECT_EQ(token_count(1600, 1600, 20) / token_count(100, 100, 20), 256u);
    EXPECT_EQ(token_count(100, 100, 100), 1u);
    EXPECT_EQ(token_count(1000, 500, 14), 2592u);
    expect_error(ErrorCode::InvalidConfig, [] { token_count(10, 10, 0); });
}

TEST(TokenBudget, SharpAreaRatio) {
    EXPECT_EQ(sharp_area_ratio({GranularityLabel::Region, {CropBox{{0, 0, 640, 480}, 1, 0}}, 100}, 640, 480), 1.0);
    EXPECT_EQ(sharp_area_ratio({GranularityLabel::Image, {}, 100}, 1600, 1600), 1.0 / 256.0);
    EXPECT_EQ(sharp_area_ratio({GranularityLabel::Image, {}, 100}, 50, 50), 1.0);
    EXPECT_EQ(sharp_area_ratio({GranularityLabel::Pixel,
                                {CropBox{{0, 0, 400, 400}, 1, 0}, CropBox{{100, 100, 200, 200}, 2, 0}},
                                100},
                               800, 800),
              0.015625);
}
