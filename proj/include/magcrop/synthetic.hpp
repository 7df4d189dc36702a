// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "magcrop/config.hpp"
#include "magcrop/granularity.hpp"
#include "magcrop/heatmap.hpp"
#include "magcrop/image.hpp"
#include "magcrop/mask_fusion.hpp"
#include "magcrop/seg_metrics.hpp"

namespace magcrop::synth {

/// Counter-based generator: draw k of stream s under seed is a pure function of (seed, s, k),
/// so fixtures are reproducible everywhere and independent streams split off cheaply.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Pure: the k-th 64-bit draw of this stream.
    std::uint64_t at(std::uint64_t counter) const noexcept;
    std::uint64_t next() noexcept { return at(m_counter++); }
    /// Uniform in [0, 1) with 53 bits.
    double uniform() noexcept;
    /// Uniform integer in [lo, hi].
    long long uniform_int(long long lo, long long hi) noexcept;
    /// Standard normal (Box-Muller, two draws per value).
    double normal() noexcept;
    CounterRng split(std::uint64_t stream) const noexcept;

private:
    std::uint64_t m_seed;
    std::uint64_t m_key;
    std::uint64_t m_counter = 0;
};

enum class TargetShape { Rectangle, Gaussian };

/// A planted object. Its footprint is the width x height box whose top-left is
/// (cx - width/2, cy - height/2); a Gaussian target fills the ellipse inscribed in it.
struct SceneTarget {
    TargetShape shape = TargetShape::Rectangle;
    int cx = 0;
    int cy = 0;
    int width = 1;
    int height = 1;
    std::uint8_t intensity = 255;

    PixelRect footprint() const noexcept;
    bool covers(int x, int y) const noexcept;
};

struct SceneSpec {
    int width = 800;
    int height = 800;
    std::vector<SceneTarget> targets;
    /// Uniform attention baseline added to every (image token, text token) entry.
    double noise_floor = 0.0;
    /// Norm of the per-pixel feature noise relative to the on-target signal norm.
    double feature_noise = 0.0;
    std::uint64_t seed = 0;

    /// TargetOutOfBounds / InvalidConfig on violations.
    void validate() const;
};

/// Spec file keys: width, height, seed, noise_floor, feature_noise, and repeated
/// `target = rect|gaussian cx cy width height intensity`.
SceneSpec parse_scene_spec(const std::vector<ConfigEntry>& entries);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string format_scene_spec(const SceneSpec& spec);

struct Scene {
    ImagePlane image;
    std::vector<BinaryMask> masks;
};

/// Gray image: seeded background texture in [60, 100), targets painted in order.
Scene render_scene(const SceneSpec& spec);
BinaryMask target_mask(const SceneSpec& spec, std::size_t target);

/// Slab for `region` (whole image by default) on a token grid that must divide the region.
/// attn[i,t] is proportional to w_t * overlap_i + noise_floor, where overlap_i is the
/// fraction of token i's patch covered by the target and w_t a seeded per-text-token weight
/// in [0.5, 1.5); the matrix is scaled so the largest row sums to 1. Gradients are all 1.
AttentionSlab attention_for(const SceneSpec& spec, std::optional<std::size_t> target, TokenGrid grid,
                            std::size_t text_tokens, std::optional<PixelRect> region = std::nullopt);

struct LevelShape {
    std::size_t height = 0;
    std::size_t width = 0;
};

/// 1/32, 1/16 and 1/8 of the image, floored at 1.
std::vector<LevelShape> default_pyramid_shapes(int width, int height);

/// Logit the reference decoder produces on fully covered target cells.
inline constexpr double kSaturatedLogit = 12.0;

/// Level l = (2*coverage - 1) * s * q/|q| plus seeded noise orthogonal to q with norm
/// feature_noise * s, where coverage is the target mask area-averaged to the level and s is
/// chosen so full coverage decodes to kSaturatedLogit.
FeaturePyramid features_for(const SceneSpec& spec, std::size_t target, std::span<const float> query,
                            std::span<const LevelShape> shapes);

/// Single-target scene used by the hit-rate and end-to-end checks: one rectangle or
/// Gaussian of side 80..160 placed uniformly at random inside the image.
SceneSpec random_single_target_scene(std::uint64_t seed, int width = 800, int height = 800,
                                     double noise_floor = 0.05);

ClassifierWeights make_classifier_weights(std::uint64_t seed);
std::vector<float> make_query_embedding(std::uint64_t seed);

struct FusionFixture {
    SegTokenSet tokens;
    ProjectionWeights projection;
};

FusionFixture make_fusion_fixture(std::uint64_t seed, std::size_t token_count, std::size_t hidden);

}  // namespace magcrop::synth
