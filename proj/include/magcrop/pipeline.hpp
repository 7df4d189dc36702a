// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

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
#include "magcrop/semantic_crop.hpp"
#include "magcrop/synthetic.hpp"

namespace magcrop {

std::string sha256_hex(std::span<const std::uint8_t> bytes);

struct ManifestEntry {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

/// `name<TAB>sha256<TAB>bytes` lines sorted by name.
std::string format_manifest(std::vector<ManifestEntry> entries);

/// Writes `bytes` to dir/name and returns its manifest entry.
ManifestEntry write_artifact(const std::filesystem::path& dir, const std::string& name,
                             std::span<const std::uint8_t> bytes);

struct PipelineInputs {
    std::optional<std::filesystem::path> image;
    std::optional<std::string> query;
    std::optional<std::filesystem::path> embedding;
    std::optional<std::filesystem::path> weights_dir;
    /// Forces the label and skips classification.
    std::optional<GranularityLabel> granularity;

    std::optional<std::filesystem::path> attn;
    std::optional<std::filesystem::path> grad;
    /// Fresh slab for the stage-1 crop; without it the stage-1 heatmap is cut to box 1.
    std::optional<std::filesystem::path> attn2;
    std::optional<std::filesystem::path> grad2;
    std::optional<TokenGrid> grid;
    std::optional<TokenGrid> grid2;

    std::optional<std::filesystem::path> tokens;
    std::optional<std::filesystem::path> proj_dir;
    std::vector<std::filesystem::path> features;

    /// Scene spec: supplies the image (when none is given), attention slabs, and fusion
    /// inputs from the synthetic oracle.
    std::optional<synth::SceneSpec> synthetic;
};

struct PipelineRun {
    GranularityLabel granularity = GranularityLabel::Image;
    std::optional<Classification> classification;
    ImagePlane input;
    std::vector<Heatmap> heatmaps;
    std::vector<CropBox> boxes;
    ImagePlane adjusted;
    std::optional<FusedMask> mask;
    std::string report;
};

/// classify -> (heatmap -> box)* -> adjust -> (fusion if Pixel). Errors carry the name of the
/// stage that raised them; a missing stage input raises MissingInput.
PipelineRun run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs);

/// Writes every artifact of `run` plus `manifest.tsv` into `dir`; returns the manifest
/// entries.
std::vector<ManifestEntry> write_pipeline_outputs(const PipelineRun& run, const std::filesystem::path& dir);

/// Token lattice for a synthetic slab: per axis, the divisor of the extent closest to
/// extent/patch that is at least min_cells. BadGrid if none exists.
TokenGrid synthetic_token_grid(int width, int height, int patch, std::size_t min_cells);

/// Fused query and pyramid the synthetic oracle plants for target 0 of `spec`.
struct SyntheticFusionInputs {
    SegTokenSet tokens;
    ProjectionWeights projection;
    FeaturePyramid pyramid;
};
SyntheticFusionInputs synthetic_fusion_inputs(const synth::SceneSpec& spec, std::span<const double> beta);

/// beta from the config, or uniform over `count` tokens when the config leaves it empty.
std::vector<double> resolve_token_weights(const PipelineConfig& cfg, std::size_t count);

}  // namespace magcrop
