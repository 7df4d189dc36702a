// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

// magcrop: command-line entry point for every stage of the preprocessing pipeline.
// Exit codes: 0 success, 2 bad input, 3 internal invariant violation.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "magcrop/config.hpp"
#include "magcrop/error.hpp"
#include "magcrop/granularity.hpp"
#include "magcrop/heatmap.hpp"
#include "magcrop/image.hpp"
#include "magcrop/mask_fusion.hpp"
#include "magcrop/params.hpp"
#include "magcrop/pipeline.hpp"
#include "magcrop/resolution.hpp"
#include "magcrop/semantic_crop.hpp"
#include "magcrop/seg_metrics.hpp"
#include "magcrop/synthetic.hpp"
#include "magcrop/tensor.hpp"

namespace fs = std::filesystem;
using namespace magcrop;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

// Flags shared by subcommands that consume the pipeline configuration. Unset flags leave the
// value from --config (or the default) in place.
struct ConfigFlags {
    std::string config_path;
    std::optional<int> patch_size;
    std::optional<std::size_t> cells;
    std::string scales;
    std::optional<int> factor;
    std::optional<int> image_size;
    std::string beta;
    std::string omega;
    std::optional<double> threshold;
    std::optional<std::size_t> text_tokens;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "key=value configuration file (flags win)");
        app->add_option("--patch-size", patch_size, "pixels per visual token side");
        app->add_option("--cells", cells, "heatmap grid cells per axis");
        app->add_option("--scales", scales, "candidate box sizes in cells, e.g. 1,2,3");
        app->add_option("--factor", factor, "compression factor");
        app->add_option("--image-size", image_size, "image-level output side in pixels");
        app->add_option("--beta", beta, "segmentation-token weights, comma separated");
        app->add_option("--omega", omega, "pyramid-level weights, comma separated");
        app->add_option("--threshold", threshold, "mask binarization threshold");
        app->add_option("--text-tokens", text_tokens, "text tokens in synthetic attention slabs");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (patch_size) cfg.patch_size = *patch_size;
        if (cells) cfg.grid_cells = *cells;
        if (!scales.empty()) cfg.candidate_scales = parse_size_list(scales, "--scales");
        if (factor) cfg.compression_factor = *factor;
        if (image_size) cfg.image_level_size = *image_size;
        if (!beta.empty()) cfg.token_weights = parse_double_list(beta, "--beta");
        if (!omega.empty()) cfg.fusion_weights = parse_double_list(omega, "--omega");
        if (threshold) cfg.mask_threshold = *threshold;
        if (text_tokens) cfg.text_tokens = *text_tokens;
        cfg.validate();
        return cfg;
    }
};

PixelRect parse_rect(const std::string& text, const std::string& what) {
    const auto v = parse_double_list(text, what);
    require(v.size() == 4, ErrorCode::InvalidConfig, what + ": expected x0,y0,x1,y1");
    for (double d : v) {
        require(d == static_cast<int>(d), ErrorCode::InvalidConfig, what + ": coordinates must be integers");
    }
    return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
}

std::optional<TokenGrid> parse_grid(const std::string& text, const std::string& what) {
    if (text.empty()) {
        return std::nullopt;
    }
    const auto v = parse_size_list(text, what);
    require(v.size() == 2, ErrorCode::InvalidConfig, what + ": expected rows,cols");
    return TokenGrid{v[0], v[1]};
}

GranularityLabel parse_label(const std::string& text) {
    auto g = parse_granularity(text);
    require(g.has_value(), ErrorCode::InvalidConfig, "granularity must be image, region or pixel");
    return *g;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<fs::path> png_files(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorCode::IoFailure, dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- granularity ----------------------------------------------------------------------

struct GranularityCmd {
    std::string query;
    std::string embedding;
    std::string weights_dir;

    void attach(CLI::App* app) {
        app->add_option("--query", query, "query text (keyword rules)");
        app->add_option("--embedding", embedding, "768-wide query embedding tensor");
        app->add_option("--weights-dir", weights_dir, "classifier parameter directory");
    }

    void run() const {
        if (!embedding.empty() || !weights_dir.empty()) {
            require(!embedding.empty() && !weights_dir.empty(), ErrorCode::MissingInput,
                    "--embedding and --weights-dir must be given together");
            const Tensor e = read_tensor(embedding);
            const Classification c =
                classify_embedding(e.data(), ClassifierWeights::from_parameters(read_parameter_dir(weights_dir)));
            std::cout << to_string(c.label) << '\t' << fmt(c.probabilities[0]) << ' ' << fmt(c.probabilities[1]) << ' '
                      << fmt(c.probabilities[2]) << '\n';
            return;
        }
        require(!query.empty(), ErrorCode::MissingInput, "give --query or --embedding with --weights-dir");
        std::cout << to_string(classify_keywords(query)) << '\n';
    }
};

// ---- heatmap --------------------------------------------------------------------------

struct HeatmapCmd {
    std::string attn;
    std::string grad;
    std::string grid;
    std::string out;
    std::string render;

    void attach(CLI::App* app) {
        app->add_option("--attn", attn, "attention tensor [N, T]")->required();
        app->add_option("--grad", grad, "gradient tensor [N, T]")->required();
        app->add_option("--grid", grid, "token grid rows,cols (default: square)");
        app->add_option("--out", out, "output heatmap tensor")->required();
        app->add_option("--render", render, "optional 8-bit PNG rendering");
    }

    void run() const {
        const AttentionSlab slab = AttentionSlab::from_tensors(read_tensor(attn), read_tensor(grad));
        const Heatmap h = compute_heatmap(slab, parse_grid(grid, "--grid"));
        write_tensor(heatmap_to_tensor(h), out);
        if (!render.empty()) {
            write_image(render_heatmap(h), render);
        }
        std::cout << h.rows << 'x' << h.cols << '\n';
    }
};

// ---- crop-box -------------------------------------------------------------------------

struct CropBoxCmd {
    ConfigFlags flags;
    std::string heatmap;
    int width = 0;
    int height = 0;
    std::string parent;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--heatmap", heatmap, "heatmap tensor")->required();
        app->add_option("--width", width, "image width in pixels")->required();
        app->add_option("--height", height, "image height in pixels")->required();
        app->add_option("--parent", parent, "stage-1 box x0,y0,x1,y1; the heatmap then covers that crop");
    }

    void run() const {
        const PipelineConfig cfg = flags.resolve();
        const Heatmap h = heatmap_from_tensor(read_tensor(heatmap));
        std::optional<CropBox> parent_box;
        if (!parent.empty()) {
            parent_box = CropBox{parse_rect(parent, "--parent"), 1, 0.0};
        }
        const CropBox b = select_box(h, GridSpec(cfg.grid_cells, cfg.candidate_scales), width, height, parent_box);
        std::cout << b.rect.x0 << ' ' << b.rect.y0 << ' ' << b.rect.x1 << ' ' << b.rect.y1 << ' ' << fmt(b.score)
                  << '\n';
    }
};

// ---- adjust ---------------------------------------------------------------------------

struct AdjustCmd {
    ConfigFlags flags;
    std::string image;
    std::string granularity;
    std::string box1;
    std::string box2;
    std::string out;
    std::string batch;
    std::string out_dir;
    bool report = false;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--image", image, "input PNG");
        app->add_option("--granularity", granularity, "image | region | pixel")->required();
        app->add_option("--box1", box1, "stage-1 box x0,y0,x1,y1");
        app->add_option("--box2", box2, "stage-2 box x0,y0,x1,y1");
        app->add_option("--out", out, "output PNG");
        app->add_option("--batch", batch, "directory of PNGs processed concurrently");
        app->add_option("--out-dir", out_dir, "output directory for --batch");
        app->add_flag("--report", report, "print token counts, sharp-area ratio and PNG sizes");
    }

    CompositePlan plan(const PipelineConfig& cfg) const {
        CompositePlan p;
        p.granularity = parse_label(granularity);
        p.target_size = cfg.image_level_size;
        if (!box1.empty()) p.boxes.push_back({parse_rect(box1, "--box1"), 1, 0.0});
        if (!box2.empty()) p.boxes.push_back({parse_rect(box2, "--box2"), 2, 0.0});
        return p;
    }

    static std::string describe(const ImagePlane& in, const ImagePlane& out, const CompositePlan& p,
                                const PipelineConfig& cfg) {
        const auto patch = static_cast<std::size_t>(cfg.patch_size);
        const std::size_t in_png = encode_png(in).size();
        const std::size_t out_png = encode_png(out).size();
        std::ostringstream os;
        os << "tokens_before\t" << token_count(in.width(), in.height(), patch) << '\n'
           << "tokens_after\t" << token_count(out.width(), out.height(), patch) << '\n'
           << "sharp_area_ratio\t" << fmt(sharp_area_ratio(p, in.width(), in.height())) << '\n'
           << "png_bytes_before\t" << in_png << '\n'
           << "png_bytes_after\t" << out_png << '\n';
        return os.str();
    }

    void run() const {
        const PipelineConfig cfg = flags.resolve();
        const CompositePlan p = plan(cfg);
        if (!batch.empty()) {
            run_batch(cfg, p);
            return;
        }
        require(!image.empty() && !out.empty(), ErrorCode::MissingInput, "--image and --out are required");
        const ImagePlane in = read_image(image);
        const ImagePlane result = adjust(in, p, cfg);
        write_image(result, out);
        if (report) {
            std::cout << describe(in, result, p, cfg);
        }
    }

    // Files are processed by a small worker pool; the summary is printed sorted by filename.
    void run_batch(const PipelineConfig& cfg, const CompositePlan& p) const {
        require(!out_dir.empty(), ErrorCode::MissingInput, "--batch needs --out-dir");
        fs::create_directories(out_dir);
        const std::vector<fs::path> files = png_files(batch);
        std::vector<std::string> lines(files.size());
        std::vector<std::optional<Error>> errors(files.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < files.size(); i = next++) {
                try {
                    const ImagePlane in = read_image(files[i]);
                    const ImagePlane result = adjust(in, p, cfg);
                    write_image(result, fs::path(out_dir) / files[i].filename());
                    lines[i] = files[i].filename().string() + '\t' + std::to_string(result.width()) + 'x' +
                               std::to_string(result.height());
                    if (report) {
                        std::string d = describe(in, result, p, cfg);
                        std::replace(d.begin(), d.end(), '\n', ' ');
                        lines[i] += '\t' + d;
                    }
                } catch (const Error& e) {
                    errors[i] = e;
                }
            }
        };
        const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                                  static_cast<unsigned>(files.size())));
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (errors[i]) {
                throw Error(errors[i]->code(), files[i].filename().string() + ": " + errors[i]->detail());
            }
            std::cout << lines[i] << '\n';
        }
    }
};

// ---- fuse-mask ------------------------------------------------------------------------

struct FuseMaskCmd {
    ConfigFlags flags;
    std::string tokens;
    std::string proj_dir;
    std::vector<std::string> features;
    std::string out;
    std::string out_prob;
    std::optional<std::size_t> width;
    std::optional<std::size_t> height;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--tokens", tokens, "segmentation tokens [N, 4096]")->required();
        app->add_option("--proj-dir", proj_dir, "text-projection parameter directory")->required();
        app->add_option("--features", features, "pyramid levels [256, h, w], coarse to fine")->required();
        app->add_option("--out", out, "binarized mask PNG")->required();
        app->add_option("--out-prob", out_prob, "optional fused probability tensor");
        app->add_option("--width", width, "output width (default: finest level)");
        app->add_option("--height", height, "output height (default: finest level)");
    }

    void run() const {
        const PipelineConfig cfg = flags.resolve();
        const SegTokenSet toks = SegTokenSet::from_tensor(read_tensor(tokens));
        const ProjectionWeights proj = ProjectionWeights::from_parameters(read_parameter_dir(proj_dir));
        std::vector<FeatureLevel> levels;
        for (const auto& f : features) {
            levels.push_back(FeatureLevel::from_tensor(read_tensor(f)));
        }
        const FeaturePyramid pyramid(std::move(levels));
        const std::size_t w = width.value_or(pyramid.levels().back().width);
        const std::size_t h = height.value_or(pyramid.levels().back().height);
        const auto beta = resolve_token_weights(cfg, toks.count());
        const FusedMask m = generate_mask(toks, proj, pyramid, beta, cfg.fusion_weights, w, h, cfg.mask_threshold);
        const BinaryMask bin = m.binarize();
        write_image(mask_to_image(bin), out);
        if (!out_prob.empty()) {
            write_tensor(mask_to_tensor(m.mask), out_prob);
        }
        std::cout << w << 'x' << h << '\t' << bin.popcount() << '\n';
    }
};

// ---- eval-seg -------------------------------------------------------------------------

struct EvalSegCmd {
    std::string pred_dir;
    std::string gt_dir;
    bool json = false;

    void attach(CLI::App* app) {
        app->add_option("--pred-dir", pred_dir, "predicted mask PNGs")->required();
        app->add_option("--gt-dir", gt_dir, "ground-truth mask PNGs, paired by filename")->required();
        app->add_flag("--json", json, "also print one JSON line");
    }

    void run() const {
        std::vector<MaskPair> pairs;
        for (const fs::path& gt : png_files(gt_dir)) {
            const fs::path pred = fs::path(pred_dir) / gt.filename();
            require(fs::exists(pred), ErrorCode::MissingInput, "no prediction for " + gt.filename().string());
            pairs.emplace_back(mask_from_image(read_image(pred)), mask_from_image(read_image(gt)));
        }
        const MetricReport r = evaluate(pairs);
        std::cout << format_report(r);
        if (json) {
            std::cout << format_report_json(r) << '\n';
        }
    }
};

// ---- synth ----------------------------------------------------------------------------

struct SynthCmd {
    ConfigFlags flags;
    std::string spec;
    std::string out_dir;
    std::string grid;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--spec", spec, "scene spec file")->required();
        app->add_option("--out-dir", out_dir, "output directory")->required();
        app->add_option("--grid", grid, "token grid rows,cols for the attention slab");
    }

    void run() const {
        const PipelineConfig cfg = flags.resolve();
        const synth::SceneSpec scene = synth::load_scene_spec(spec);
        const synth::Scene rendered = synth::render_scene(scene);
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        std::vector<ManifestEntry> entries;
        auto add = [&](const std::string& name, std::span<const std::uint8_t> bytes) {
            entries.push_back(write_artifact(dir, name, bytes));
        };
        const std::string spec_text = synth::format_scene_spec(scene);
        add("scene.cfg", {reinterpret_cast<const std::uint8_t*>(spec_text.data()), spec_text.size()});
        add("image.png", encode_png(rendered.image));
        for (std::size_t k = 0; k < rendered.masks.size(); ++k) {
            add("mask_" + std::to_string(k) + ".png", encode_png(mask_to_image(rendered.masks[k])));
        }

        const TokenGrid g = parse_grid(grid, "--grid")
                                .value_or(synthetic_token_grid(scene.width, scene.height, cfg.patch_size, cfg.grid_cells));
        const auto target = scene.targets.empty() ? std::nullopt : std::optional<std::size_t>(0);
        const AttentionSlab slab = synth::attention_for(scene, target, g, cfg.text_tokens);
        const auto attn = slab.attn();
        const auto grad = slab.grad();
        add("attn.magt", encode_tensor(Tensor({slab.image_tokens(), slab.text_tokens()}, {attn.begin(), attn.end()})));
        add("grad.magt", encode_tensor(Tensor({slab.image_tokens(), slab.text_tokens()}, {grad.begin(), grad.end()})));

        if (target) {
            const auto beta = resolve_token_weights(cfg, 2);
            const SyntheticFusionInputs fx = synthetic_fusion_inputs(scene, beta);
            add("tokens.magt", encode_tensor(fx.tokens.to_tensor()));
            for (std::size_t l = 0; l < fx.pyramid.size(); ++l) {
                add("features_" + std::to_string(l + 1) + ".magt", encode_tensor(fx.pyramid.level(l).to_tensor()));
            }
            write_parameter_dir(fx.projection.to_parameters(), ProjectionWeights::parameter_names(), dir / "proj");
            const fs::path proj_manifest = dir / "proj" / kParameterManifest;
            const auto manifest_bytes = read_file_bytes(proj_manifest);
            entries.push_back({"proj/" + std::string(kParameterManifest), sha256_hex(manifest_bytes),
                               manifest_bytes.size()});
            for (const auto& name : ProjectionWeights::parameter_names()) {
                const auto bytes = read_file_bytes(dir / "proj" / (name + ".magt"));
                entries.push_back({"proj/" + name + ".magt", sha256_hex(bytes), bytes.size()});
            }
        }
        const std::string manifest = format_manifest(entries);
        write_file_bytes({reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()},
                         dir / "manifest.tsv");
        std::cout << "grid\t" << g.rows << 'x' << g.cols << '\n' << manifest;
    }
};

// ---- pipeline -------------------------------------------------------------------------

struct PipelineCmd {
    ConfigFlags flags;
    std::string image;
    std::string query;
    std::string embedding;
    std::string weights_dir;
    std::string granularity;
    std::string attn, grad, attn2, grad2, grid, grid2;
    std::string tokens;
    std::string proj_dir;
    std::vector<std::string> features;
    std::string synthetic;
    std::string out_dir;

    void attach(CLI::App* app) {
        flags.attach(app);
        app->add_option("--image", image, "input PNG (synthetic mode renders one when omitted)");
        app->add_option("--query", query, "query text");
        app->add_option("--embedding", embedding, "768-wide query embedding tensor");
        app->add_option("--weights-dir", weights_dir, "classifier parameter directory");
        app->add_option("--granularity", granularity, "force image | region | pixel");
        app->add_option("--attn", attn, "stage-1 attention tensor");
        app->add_option("--grad", grad, "stage-1 gradient tensor");
        app->add_option("--grid", grid, "stage-1 token grid rows,cols");
        app->add_option("--attn2", attn2, "stage-2 attention tensor (over the stage-1 crop)");
        app->add_option("--grad2", grad2, "stage-2 gradient tensor");
        app->add_option("--grid2", grid2, "stage-2 token grid rows,cols");
        app->add_option("--tokens", tokens, "segmentation tokens [N, 4096]");
        app->add_option("--proj-dir", proj_dir, "text-projection parameter directory");
        app->add_option("--features", features, "pyramid levels [256, h, w], coarse to fine");
        app->add_option("--synthetic", synthetic, "scene spec; synthesizes attention and fusion inputs");
        app->add_option("--out-dir", out_dir, "output directory")->required();
    }

    void run() const {
        const PipelineConfig cfg = flags.resolve();
        PipelineInputs in;
        auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
        in.image = opt_path(image);
        if (!query.empty()) in.query = query;
        in.embedding = opt_path(embedding);
        in.weights_dir = opt_path(weights_dir);
        if (!granularity.empty()) in.granularity = parse_label(granularity);
        in.attn = opt_path(attn);
        in.grad = opt_path(grad);
        in.attn2 = opt_path(attn2);
        in.grad2 = opt_path(grad2);
        in.grid = parse_grid(grid, "--grid");
        in.grid2 = parse_grid(grid2, "--grid2");
        in.tokens = opt_path(tokens);
        in.proj_dir = opt_path(proj_dir);
        for (const auto& f : features) {
            in.features.emplace_back(f);
        }
        if (!synthetic.empty()) {
            in.synthetic = synth::load_scene_spec(synthetic);
        }
        const PipelineRun run = run_pipeline(cfg, in);
        write_pipeline_outputs(run, out_dir);
        std::cout << run.report;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magcrop: granularity-aware image preprocessing for vision-language models"};
    app.require_subcommand(1);

    GranularityCmd granularity;
    HeatmapCmd heatmap;
    CropBoxCmd crop_box;
    AdjustCmd adjust_cmd;
    FuseMaskCmd fuse_mask;
    EvalSegCmd eval_seg;
    SynthCmd synth_cmd;
    PipelineCmd pipeline;

    granularity.attach(app.add_subcommand("granularity", "classify a query's task granularity"));
    heatmap.attach(app.add_subcommand("heatmap", "gradient-weighted attention heatmap"));
    crop_box.attach(app.add_subcommand("crop-box", "select the most salient crop box"));
    adjust_cmd.attach(app.add_subcommand("adjust", "granularity-conditioned resolution adjustment"));
    fuse_mask.attach(app.add_subcommand("fuse-mask", "multi-scale mask fusion"));
    eval_seg.attach(app.add_subcommand("eval-seg", "referring-segmentation metrics"));
    synth_cmd.attach(app.add_subcommand("synth", "write synthetic scene fixtures"));
    pipeline.attach(app.add_subcommand("pipeline", "run the full preprocessing pipeline"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "granularity") granularity.run();
        else if (name == "heatmap") heatmap.run();
        else if (name == "crop-box") crop_box.run();
        else if (name == "adjust") adjust_cmd.run();
        else if (name == "fuse-mask") fuse_mask.run();
        else if (name == "eval-seg") eval_seg.run();
        else if (name == "synth") synth_cmd.run();
        else if (name == "pipeline") pipeline.run();
    } catch (const Error& e) {
        std::cerr << "magcrop: " << e.what() << '\n';
        return e.is_input_error() ? kExitInput : kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "magcrop: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return 0;
}
