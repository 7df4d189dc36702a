// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "magcrop/error.hpp"
#include "magcrop/resample.hpp"

namespace magcrop::synth {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stream ids for the independent noise sources.
enum Stream : std::uint64_t {
    kBackground = 1,
    kTextWeights = 2,
    kFeatureNoise = 3,
    kScenePlacement = 4,
    kClassifier = 5,
    kEmbedding = 6,
    kTokens = 7,
    kProjection = 8,
};

std::vector<float> normal_block(CounterRng& rng, std::size_t n, double scale) {
    std::vector<float> out(n);
    for (float& v : out) {
        v = static_cast<float>(rng.normal() * scale);
    }
    return out;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : m_seed(seed), m_key(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
    return mix64(m_key + (counter + 1) * kGolden);
}

double CounterRng::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

long long CounterRng::uniform_int(long long lo, long long hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long long>(next() % span);
}

double CounterRng::normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::split(std::uint64_t stream) const noexcept {
    return CounterRng(m_key, stream);
}

PixelRect SceneTarget::footprint() const noexcept {
    const int x0 = cx - width / 2;
    const int y0 = cy - height / 2;
    return {x0, y0, x0 + width, y0 + height};
}

bool SceneTarget::covers(int x, int y) const noexcept {
    const PixelRect r = footprint();
    if (!r.contains(x, y)) {
        return false;
    }
    if (shape == TargetShape::Rectangle) {
        return true;
    }
    const double dx = (x + 0.5 - (r.x0 + r.x1) / 2.0) / (width / 2.0);
    const double dy = (y + 0.5 - (r.y0 + r.y1) / 2.0) / (height / 2.0);
    return dx * dx + dy * dy <= 1.0;
}

void SceneSpec::validate() const {
    require(width > 0 && height > 0, ErrorCode::InvalidConfig, "scene dimensions must be positive");
    require(noise_floor >= 0.0 && noise_floor <= 0.1, ErrorCode::InvalidConfig, "noise_floor must lie in [0, 0.1]");
    require(feature_noise >= 0.0 && std::isfinite(feature_noise), ErrorCode::InvalidConfig,
            "feature_noise must be non-negative");
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const SceneTarget& t = targets[k];
        require(t.width > 0 && t.height > 0 && t.footprint().within(width, height), ErrorCode::TargetOutOfBounds,
                "target " + std::to_string(k) + " footprint " + to_string(t.footprint()) + " leaves the " +
                    std::to_string(width) + "x" + std::to_string(height) + " scene");
    }
}

SceneSpec parse_scene_spec(const std::vector<ConfigEntry>& entries) {
    SceneSpec spec;
    for (const auto& e : entries) {
        const std::string what = "scene key '" + e.key + "' (line " + std::to_string(e.line) + ")";
        if (e.key == "width") {
            spec.width = parse_int(e.value, what);
        } else if (e.key == "height") {
            spec.height = parse_int(e.value, what);
        } else if (e.key == "seed") {
            std::istringstream in(e.value);
            require(static_cast<bool>(in >> spec.seed) && in.eof(), ErrorCode::InvalidConfig, what + ": bad seed");
        } else if (e.key == "noise_floor") {
            spec.noise_floor = parse_double(e.value, what);
        } else if (e.key == "feature_noise") {
            spec.feature_noise = parse_double(e.value, what);
        } else if (e.key == "target") {
            std::istringstream in(e.value);
            std::string kind;
            int intensity = 0;
            SceneTarget t;
            require(static_cast<bool>(in >> kind >> t.cx >> t.cy >> t.width >> t.height >> intensity),
                    ErrorCode::InvalidConfig, what + ": expected 'rect|gaussian cx cy width height intensity'");
            require(kind == "rect" || kind == "gaussian", ErrorCode::InvalidConfig, what + ": unknown shape " + kind);
            require(intensity >= 0 && intensity <= 255, ErrorCode::InvalidConfig, what + ": intensity outside 0..255");
            t.shape = kind == "rect" ? TargetShape::Rectangle : TargetShape::Gaussian;
            t.intensity = static_cast<std::uint8_t>(intensity);
            spec.targets.push_back(t);
        } else {
            fail(ErrorCode::InvalidConfig, "unknown " + what);
        }
    }
    spec.validate();
    return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
    return parse_scene_spec(read_key_values(path));
}

std::string format_scene_spec(const SceneSpec& spec) {
    std::ostringstream os;
    os << "width = " << spec.width << "\nheight = " << spec.height << "\nseed = " << spec.seed
       << "\nnoise_floor = " << spec.noise_floor << "\nfeature_noise = " << spec.feature_noise << '\n';
    for (const SceneTarget& t : spec.targets) {
        os << "target = " << (t.shape == TargetShape::Rectangle ? "rect" : "gaussian") << ' ' << t.cx << ' ' << t.cy
           << ' ' << t.width << ' ' << t.height << ' ' << static_cast<int>(t.intensity) << '\n';
    }
    return os.str();
}

BinaryMask target_mask(const SceneSpec& spec, std::size_t target) {
    require(target < spec.targets.size(), ErrorCode::TargetOutOfBounds,
            "target index " + std::to_string(target) + " but scene has " + std::to_string(spec.targets.size()));
    const SceneTarget& t = spec.targets[target];
    BinaryMask m(spec.width, spec.height);
    const PixelRect r = t.footprint();
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            m.set(x, y, t.covers(x, y));
        }
    }
    return m;
}

Scene render_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene{ImagePlane(spec.width, spec.height, 1), {}};
    CounterRng background(spec.seed, kBackground);
    auto px = scene.image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = static_cast<std::uint8_t>(60 + background.at(i) % 40);
    }
    for (std::size_t k = 0; k < spec.targets.size(); ++k) {
        const SceneTarget& t = spec.targets[k];
        const PixelRect r = t.footprint();
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                if (!t.covers(x, y)) {
                    continue;
                }
                if (t.shape == TargetShape::Rectangle) {
                    scene.image.at(x, y) = t.intensity;
                } else {
                    const double dx = (x + 0.5 - (r.x0 + r.x1) / 2.0) / (t.width / 2.0);
                    const double dy = (y + 0.5 - (r.y0 + r.y1) / 2.0) / (t.height / 2.0);
                    const double weight = std::exp(-2.0 * (dx * dx + dy * dy));
                    const double bg = scene.image.at(x, y);
                    scene.image.at(x, y) = static_cast<std::uint8_t>(std::nearbyint(bg + weight * (t.intensity - bg)));
                }
            }
        }
        scene.masks.push_back(target_mask(spec, k));
    }
    return scene;
}

AttentionSlab attention_for(const SceneSpec& spec, std::optional<std::size_t> target, TokenGrid grid,
                            std::size_t text_tokens, std::optional<PixelRect> region) {
    spec.validate();
    const PixelRect frame = region.value_or(PixelRect{0, 0, spec.width, spec.height});
    require(frame.within(spec.width, spec.height), ErrorCode::BadGrid, "region " + to_string(frame) + " outside scene");
    require(grid.rows > 0 && grid.cols > 0 && text_tokens > 0, ErrorCode::BadGrid, "token grid must be non-empty");
    require(frame.height() % static_cast<int>(grid.rows) == 0 && frame.width() % static_cast<int>(grid.cols) == 0,
            ErrorCode::BadGrid,
            "token grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " does not divide " +
                std::to_string(frame.width()) + "x" + std::to_string(frame.height()));

    const int patch_h = frame.height() / static_cast<int>(grid.rows);
    const int patch_w = frame.width() / static_cast<int>(grid.cols);
    std::vector<double> overlap(grid.count(), 0.0);
    if (target) {
        const BinaryMask mask = target_mask(spec, *target);
        for (std::size_t r = 0; r < grid.rows; ++r) {
            for (std::size_t c = 0; c < grid.cols; ++c) {
                std::size_t hits = 0;
                const int y0 = frame.y0 + static_cast<int>(r) * patch_h;
                const int x0 = frame.x0 + static_cast<int>(c) * patch_w;
                for (int y = y0; y < y0 + patch_h; ++y) {
                    for (int x = x0; x < x0 + patch_w; ++x) {
                        hits += mask.at(x, y) ? 1 : 0;
                    }
                }
                overlap[r * grid.cols + c] = static_cast<double>(hits) / (static_cast<double>(patch_h) * patch_w);
            }
        }
    }

    CounterRng text_rng(spec.seed, kTextWeights);
    std::vector<double> text_weight(text_tokens);
    for (double& w : text_weight) {
        w = 0.5 + text_rng.uniform();
    }

    const std::size_t n = grid.count();
    std::vector<double> raw(n * text_tokens);
    double max_row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t t = 0; t < text_tokens; ++t) {
            raw[i * text_tokens + t] = text_weight[t] * overlap[i] + spec.noise_floor;
            row += raw[i * text_tokens + t];
        }
        max_row = std::max(max_row, row);
    }
    std::vector<float> attn(raw.size(), 0.0f);
    if (max_row > 0.0) {
        for (std::size_t k = 0; k < raw.size(); ++k) {
            attn[k] = static_cast<float>(raw[k] / max_row);
        }
    }
    return AttentionSlab(n, text_tokens, std::move(attn), std::vector<float>(raw.size(), 1.0f));
}

std::vector<LevelShape> default_pyramid_shapes(int width, int height) {
    std::vector<LevelShape> shapes;
    for (int divisor : {32, 16, 8}) {
        shapes.push_back({static_cast<std::size_t>(std::max(1, height / divisor)),
                          static_cast<std::size_t>(std::max(1, width / divisor))});
    }
    return shapes;
}

FeaturePyramid features_for(const SceneSpec& spec, std::size_t target, std::span<const float> query,
                            std::span<const LevelShape> shapes) {
    require(query.size() == kDecoderWidth, ErrorCode::ShapeMismatch, "query must be 256 wide");
    require(!shapes.empty(), ErrorCode::ShapeMismatch, "at least one pyramid level is required");
    double q_norm = 0.0;
    for (float v : query) {
        q_norm += static_cast<double>(v) * v;
    }
    q_norm = std::sqrt(q_norm);
    require(q_norm > 0.0, ErrorCode::ShapeMismatch, "query must be non-zero");

    std::vector<double> unit(kDecoderWidth);
    for (std::size_t k = 0; k < kDecoderWidth; ++k) {
        unit[k] = query[k] / q_norm;
    }
    // <q, s*unit> / sqrt(256) == kSaturatedLogit on full coverage.
    const double signal = kSaturatedLogit * std::sqrt(static_cast<double>(kDecoderWidth)) / q_norm;
    const double noise_norm = spec.feature_noise * signal;

    const BinaryMask mask = target_mask(spec, target);
    FloatPlane mask_plane(spec.width, spec.height, 1);
    auto bits = mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        mask_plane.values[i] = bits[i] ? 1.0f : 0.0f;
    }

    std::vector<FeatureLevel> levels;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const LevelShape shape = shapes[l];
        require(shape.height > 0 && shape.width > 0, ErrorCode::ShapeMismatch, "pyramid level must be non-empty");
        const FloatPlane coverage =
            resize_area(mask_plane, static_cast<int>(shape.width), static_cast<int>(shape.height));
        FeatureLevel level{shape.height, shape.width, std::vector<float>(kDecoderWidth * shape.height * shape.width)};
        const CounterRng noise_base = CounterRng(spec.seed, kFeatureNoise).split(l);
        std::vector<double> noise(kDecoderWidth);
        for (std::size_t y = 0; y < shape.height; ++y) {
            for (std::size_t x = 0; x < shape.width; ++x) {
                const double amplitude =
                    (2.0 * coverage.at(static_cast<int>(x), static_cast<int>(y)) - 1.0) * signal;
                std::fill(noise.begin(), noise.end(), 0.0);
                if (noise_norm > 0.0) {
                    CounterRng rng = noise_base.split(y * shape.width + x);
                    double along = 0.0;
                    for (double& v : noise) {
                        v = rng.normal();
                    }
                    for (std::size_t k = 0; k < kDecoderWidth; ++k) {
                        along += noise[k] * unit[k];
                    }
                    double norm = 0.0;
                    for (std::size_t k = 0; k < kDecoderWidth; ++k) {
                        noise[k] -= along * unit[k];
                        norm += noise[k] * noise[k];
                    }
                    norm = std::sqrt(norm);
                    for (double& v : noise) {
                        v = norm > 0.0 ? v * noise_norm / norm : 0.0;
                    }
                }
                for (std::size_t ch = 0; ch < kDecoderWidth; ++ch) {
                    level.values[(ch * shape.height + y) * shape.width + x] =
                        static_cast<float>(amplitude * unit[ch] + noise[ch]);
                }
            }
        }
        levels.push_back(std::move(level));
    }
    return FeaturePyramid(std::move(levels));
}

SceneSpec random_single_target_scene(std::uint64_t seed, int width, int height, double noise_floor) {
    CounterRng rng(seed, kScenePlacement);
    SceneTarget t;
    t.shape = rng.uniform() < 0.5 ? TargetShape::Rectangle : TargetShape::Gaussian;
    t.width = static_cast<int>(rng.uniform_int(80, std::min(160, width)));
    t.height = static_cast<int>(rng.uniform_int(80, std::min(160, height)));
    t.cx = static_cast<int>(rng.uniform_int(t.width / 2, width - (t.width - t.width / 2)));
    t.cy = static_cast<int>(rng.uniform_int(t.height / 2, height - (t.height - t.height / 2)));
    t.intensity = static_cast<std::uint8_t>(rng.uniform_int(180, 255));

    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    spec.targets = {t};
    spec.noise_floor = noise_floor;
    spec.seed = seed;
    spec.validate();
    return spec;
}

ClassifierWeights make_classifier_weights(std::uint64_t seed) {
    CounterRng rng(seed, kClassifier);
    ClassifierWeights w;
    w.w1 = normal_block(rng, kClassifierHidden1 * kQueryEmbeddingWidth, 1.0 / std::sqrt(768.0));
    w.b1 = normal_block(rng, kClassifierHidden1, 0.05);
    w.w2 = normal_block(rng, kClassifierHidden2 * kClassifierHidden1, 1.0 / std::sqrt(256.0));
    w.b2 = normal_block(rng, kClassifierHidden2, 0.05);
    w.w3 = normal_block(rng, kGranularityClasses * kClassifierHidden2, 1.0 / std::sqrt(128.0));
    w.b3 = normal_block(rng, kGranularityClasses, 0.05);
    return w;
}

std::vector<float> make_query_embedding(std::uint64_t seed) {
    CounterRng rng(seed, kEmbedding);
    return normal_block(rng, kQueryEmbeddingWidth, 1.0);
}

FusionFixture make_fusion_fixture(std::uint64_t seed, std::size_t token_count, std::size_t hidden) {
    CounterRng token_rng(seed, kTokens);
    CounterRng proj_rng(seed, kProjection);
    ProjectionWeights p;
    p.hidden = hidden;
    p.w1 = normal_block(proj_rng, hidden * kSegTokenWidth, 1.0 / std::sqrt(static_cast<double>(kSegTokenWidth)));
    p.b1 = normal_block(proj_rng, hidden, 0.05);
    p.w2 = normal_block(proj_rng, kDecoderWidth * hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
    p.b2 = normal_block(proj_rng, kDecoderWidth, 0.05);
    return FusionFixture{SegTokenSet(token_count, normal_block(token_rng, token_count * kSegTokenWidth, 1.0)),
                         std::move(p)};
}

}  // namespace magcrop::synth
