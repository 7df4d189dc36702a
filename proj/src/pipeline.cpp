// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "magcrop/error.hpp"
#include "magcrop/params.hpp"
#include "magcrop/resolution.hpp"
#include "magcrop/tensor.hpp"

namespace magcrop {

namespace {

constexpr std::size_t kSyntheticTokens = 2;
constexpr std::size_t kSyntheticProjectionHidden = 64;

// Runs `body`, re-tagging any library error with the stage name.
template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage '") + stage + "': " + e.detail());
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string box_line(const CropBox& b) {
    return std::to_string(b.rect.x0) + " " + std::to_string(b.rect.y0) + " " + std::to_string(b.rect.x1) + " " +
           std::to_string(b.rect.y1) + " " + format_double(b.score) + "\n";
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::size_t closest_divisor(int extent, int patch, std::size_t min_cells) {
    const double ideal = static_cast<double>(extent) / patch;
    std::size_t best = 0;
    double best_gap = 0.0;
    for (int d = 1; d <= extent; ++d) {
        if (extent % d != 0 || static_cast<std::size_t>(d) < min_cells) {
            continue;
        }
        const double gap = std::abs(d - ideal);
        if (best == 0 || gap < best_gap) {
            best = static_cast<std::size_t>(d);
            best_gap = gap;
        }
    }
    return best;
}

AttentionSlab load_slab(const std::filesystem::path& attn, const std::filesystem::path& grad) {
    return AttentionSlab::from_tensors(read_tensor(attn), read_tensor(grad));
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1,
            ErrorCode::InvariantViolation, "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string format_manifest(std::vector<ManifestEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::string out;
    for (const auto& e : entries) {
        out += e.name + "\t" + e.sha256 + "\t" + std::to_string(e.bytes) + "\n";
    }
    return out;
}

ManifestEntry write_artifact(const std::filesystem::path& dir, const std::string& name,
                             std::span<const std::uint8_t> bytes) {
    write_file_bytes(bytes, dir / name);
    return {name, sha256_hex(bytes), bytes.size()};
}

TokenGrid synthetic_token_grid(int width, int height, int patch, std::size_t min_cells) {
    require(patch >= 1, ErrorCode::BadGrid, "patch size must be >= 1");
    const std::size_t rows = closest_divisor(height, patch, min_cells);
    const std::size_t cols = closest_divisor(width, patch, min_cells);
    require(rows > 0 && cols > 0, ErrorCode::BadGrid,
            "no token lattice of at least " + std::to_string(min_cells) + " per axis divides " + std::to_string(width) +
                "x" + std::to_string(height));
    return {rows, cols};
}

std::vector<double> resolve_token_weights(const PipelineConfig& cfg, std::size_t count) {
    if (!cfg.token_weights.empty()) {
        return cfg.token_weights;
    }
    return std::vector<double>(count, 1.0 / static_cast<double>(count));
}

SyntheticFusionInputs synthetic_fusion_inputs(const synth::SceneSpec& spec, std::span<const double> beta) {
    require(!spec.targets.empty(), ErrorCode::MissingInput, "synthetic scene has no target to segment");
    synth::FusionFixture fixture = synth::make_fusion_fixture(spec.seed, kSyntheticTokens, kSyntheticProjectionHidden);
    std::vector<std::vector<float>> projected;
    for (std::size_t n = 0; n < fixture.tokens.count(); ++n) {
        projected.push_back(project_token(fixture.tokens.token(n), fixture.projection));
    }
    const std::vector<float> query = fuse_tokens(projected, beta);
    const auto shapes = synth::default_pyramid_shapes(spec.width, spec.height);
    return {std::move(fixture.tokens), std::move(fixture.projection), synth::features_for(spec, 0, query, shapes)};
}

PipelineRun run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs) {
    in_stage("config", [&] { cfg.validate(); });
    const synth::SceneSpec* scene = inputs.synthetic ? &*inputs.synthetic : nullptr;
    PipelineRun run;

    run.input = in_stage("input", [&] {
        if (inputs.image) {
            return read_image(*inputs.image);
        }
        require(scene != nullptr, ErrorCode::MissingInput, "no --image given and not in synthetic mode");
        return synth::render_scene(*scene).image;
    });
    const int width = run.input.width();
    const int height = run.input.height();
    if (scene) {
        require(scene->width == width && scene->height == height, ErrorCode::SizeMismatch,
                "stage 'input': synthetic scene size differs from the image");
    }

    run.granularity = in_stage("classify", [&] {
        if (inputs.granularity) {
            return *inputs.granularity;
        }
        if (inputs.embedding || inputs.weights_dir) {
            require(inputs.embedding && inputs.weights_dir, ErrorCode::MissingInput,
                    "--embedding and --weights-dir must be given together");
            const Tensor e = read_tensor(*inputs.embedding);
            run.classification =
                classify_embedding(e.data(), ClassifierWeights::from_parameters(read_parameter_dir(*inputs.weights_dir)));
            return run.classification->label;
        }
        require(inputs.query.has_value(), ErrorCode::MissingInput, "no query or embedding given");
        return classify_keywords(*inputs.query);
    });

    const GridSpec grid_spec = in_stage("crop", [&] { return GridSpec(cfg.grid_cells, cfg.candidate_scales); });
    const std::size_t crops = static_cast<std::size_t>(run.granularity);

    if (crops >= 1) {
        Heatmap h1 = in_stage("heatmap", [&] {
            if (inputs.attn || inputs.grad) {
                require(inputs.attn && inputs.grad, ErrorCode::MissingInput, "--attn and --grad must be given together");
                return compute_heatmap(load_slab(*inputs.attn, *inputs.grad), inputs.grid);
            }
            require(scene != nullptr, ErrorCode::MissingInput,
                    "attention tensors are required for " + std::string(to_string(run.granularity)) +
                        " granularity (or use synthetic mode)");
            const TokenGrid grid = synthetic_token_grid(width, height, cfg.patch_size, cfg.grid_cells);
            const auto target = scene->targets.empty() ? std::nullopt : std::optional<std::size_t>(0);
            return compute_heatmap(synth::attention_for(*scene, target, grid, cfg.text_tokens), grid);
        });
        run.boxes.push_back(in_stage("crop", [&] { return select_box(h1, grid_spec, width, height); }));
        run.heatmaps.push_back(std::move(h1));
    }
    if (crops >= 2) {
        const CropBox& box1 = run.boxes[0];
        Heatmap h2 = in_stage("heatmap", [&] {
            if (inputs.attn2 || inputs.grad2) {
                require(inputs.attn2 && inputs.grad2, ErrorCode::MissingInput,
                        "--attn2 and --grad2 must be given together");
                return compute_heatmap(load_slab(*inputs.attn2, *inputs.grad2), inputs.grid2);
            }
            if (scene != nullptr && !inputs.attn) {
                const TokenGrid grid =
                    synthetic_token_grid(box1.rect.width(), box1.rect.height(), cfg.patch_size, cfg.grid_cells);
                const auto target = scene->targets.empty() ? std::nullopt : std::optional<std::size_t>(0);
                return compute_heatmap(synth::attention_for(*scene, target, grid, cfg.text_tokens, box1.rect), grid);
            }
            return crop_heatmap(run.heatmaps[0], width, height, box1.rect);
        });
        run.boxes.push_back(in_stage("crop", [&] { return select_box(h2, grid_spec, width, height, box1); }));
        run.heatmaps.push_back(std::move(h2));
    }

    const CompositePlan plan{run.granularity, run.boxes, cfg.image_level_size};
    run.adjusted = in_stage("adjust", [&] { return adjust(run.input, plan, cfg); });

    const bool fusion_files = inputs.tokens || inputs.proj_dir || !inputs.features.empty();
    if (run.granularity == GranularityLabel::Pixel && (fusion_files || (scene && !scene->targets.empty()))) {
        run.mask = in_stage("fusion", [&] {
            if (fusion_files) {
                require(inputs.tokens && inputs.proj_dir && !inputs.features.empty(), ErrorCode::MissingInput,
                        "mask fusion needs --tokens, --proj-dir and --features together");
                const SegTokenSet tokens = SegTokenSet::from_tensor(read_tensor(*inputs.tokens));
                const ProjectionWeights proj = ProjectionWeights::from_parameters(read_parameter_dir(*inputs.proj_dir));
                std::vector<FeatureLevel> levels;
                for (const auto& f : inputs.features) {
                    levels.push_back(FeatureLevel::from_tensor(read_tensor(f)));
                }
                const auto beta = resolve_token_weights(cfg, tokens.count());
                return generate_mask(tokens, proj, FeaturePyramid(std::move(levels)), beta, cfg.fusion_weights,
                                     static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                                     cfg.mask_threshold);
            }
            const auto beta = resolve_token_weights(cfg, kSyntheticTokens);
            const SyntheticFusionInputs fx = synthetic_fusion_inputs(*scene, beta);
            return generate_mask(fx.tokens, fx.projection, fx.pyramid, beta, cfg.fusion_weights,
                                 static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                                 cfg.mask_threshold);
        });
    }

    std::ostringstream report;
    report << "granularity\t" << to_string(run.granularity) << '\n';
    if (run.classification) {
        report << "probabilities\t" << format_double(run.classification->probabilities[0]) << ' '
               << format_double(run.classification->probabilities[1]) << ' '
               << format_double(run.classification->probabilities[2]) << '\n';
    }
    report << "input\t" << width << 'x' << height << '\n';
    report << "output\t" << run.adjusted.width() << 'x' << run.adjusted.height() << '\n';
    for (const CropBox& b : run.boxes) {
        report << "box" << b.stage << '\t' << box_line(b);
    }
    const auto patch = static_cast<std::size_t>(cfg.patch_size);
    report << "tokens_before\t" << token_count(width, height, patch) << '\n';
    report << "tokens_after\t" << token_count(run.adjusted.width(), run.adjusted.height(), patch) << '\n';
    report << "sharp_area_ratio\t" << format_double(sharp_area_ratio(plan, width, height)) << '\n';
    if (run.mask) {
        report << "mask_pixels\t" << run.mask->binarize().popcount() << '\n';
    }
    run.report = report.str();
    return run;
}

std::vector<ManifestEntry> write_pipeline_outputs(const PipelineRun& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> entries;
    auto add = [&](const std::string& name, std::span<const std::uint8_t> bytes) {
        entries.push_back(write_artifact(dir, name, bytes));
    };
    add("adjusted.png", encode_png(run.adjusted));
    for (std::size_t k = 0; k < run.heatmaps.size(); ++k) {
        const std::string stem = "heatmap" + std::to_string(k + 1);
        add(stem + ".magt", encode_tensor(heatmap_to_tensor(run.heatmaps[k])));
        add(stem + ".png", encode_png(render_heatmap(run.heatmaps[k])));
    }
    for (const CropBox& b : run.boxes) {
        add("box" + std::to_string(b.stage) + ".txt", as_bytes(box_line(b)));
    }
    if (run.mask) {
        add("mask.png", encode_png(mask_to_image(run.mask->binarize())));
        add("mask_prob.magt", encode_tensor(mask_to_tensor(run.mask->mask)));
    }
    add("report.txt", as_bytes(run.report));

    const std::string manifest = format_manifest(entries);
    write_file_bytes(as_bytes(manifest), dir / "manifest.tsv");
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return entries;
}

}  // namespace magcrop
