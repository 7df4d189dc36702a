// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/config.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "magcrop/error.hpp"
#include "magcrop/tensor.hpp"

namespace magcrop {

namespace {

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    std::size_t b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    std::size_t e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ',' || text[i] == ' ' || text[i] == '\t')) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && text[j] != ',' && text[j] != ' ' && text[j] != '\t') {
            ++j;
        }
        if (j > i) {
            parts.push_back(text.substr(i, j - i));
        }
        i = j;
    }
    return parts;
}

}  // namespace

std::vector<ConfigEntry> parse_key_values(std::string_view text, const std::string& origin) {
    std::vector<ConfigEntry> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::size_t eq = line.find('=');
        require(eq != std::string_view::npos, ErrorCode::InvalidConfig,
                origin + ":" + std::to_string(line_no) + ": expected key=value");
        std::string_view key = trim(line.substr(0, eq));
        require(!key.empty(), ErrorCode::InvalidConfig, origin + ":" + std::to_string(line_no) + ": empty key");
        entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return entries;
}

std::vector<ConfigEntry> read_key_values(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return parse_key_values(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                            path.string());
}

int parse_int(std::string_view text, const std::string& what) {
    text = trim(text);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    require(ec == std::errc() && ptr == text.data() + text.size() && !text.empty(), ErrorCode::InvalidConfig,
            what + ": not an integer: '" + std::string(text) + "'");
    return value;
}

double parse_double(std::string_view text, const std::string& what) {
    std::string s(trim(text));
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(!s.empty() && used == s.size() && std::isfinite(value), ErrorCode::InvalidConfig,
            what + ": not a finite number: '" + s + "'");
    return value;
}

std::vector<double> parse_double_list(std::string_view text, const std::string& what) {
    std::vector<double> out;
    for (std::string_view part : split_list(text)) {
        out.push_back(parse_double(part, what));
    }
    return out;
}

std::vector<std::size_t> parse_size_list(std::string_view text, const std::string& what) {
    std::vector<std::size_t> out;
    for (std::string_view part : split_list(text)) {
        int v = parse_int(part, what);
        require(v >= 0, ErrorCode::InvalidConfig, what + ": negative value");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

bool weights_normalized(const std::vector<double>& w) {
    if (w.empty()) {
        return false;
    }
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            return false;
        }
    }
    return std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-6;
}

void PipelineConfig::validate() const {
    require(patch_size >= 1, ErrorCode::InvalidConfig, "patch_size must be >= 1");
    require(grid_cells >= 2, ErrorCode::InvalidConfig, "grid_cells must be >= 2");
    require(!candidate_scales.empty(), ErrorCode::InvalidConfig, "candidate_scales must not be empty");
    for (std::size_t s : candidate_scales) {
        require(s >= 1 && s <= grid_cells, ErrorCode::InvalidConfig,
                "candidate scale " + std::to_string(s) + " outside [1, grid_cells]");
    }
    require(compression_factor >= 2, ErrorCode::InvalidConfig, "compression_factor must be >= 2");
    require(image_level_size >= 1, ErrorCode::InvalidConfig, "image_level_size must be >= 1");
    require(weights_normalized(fusion_weights), ErrorCode::InvalidConfig,
            "fusion_weights must be non-negative and sum to 1");
    require(token_weights.empty() || weights_normalized(token_weights), ErrorCode::InvalidConfig,
            "token_weights must be non-negative and sum to 1");
    require(mask_threshold > 0.0 && mask_threshold < 1.0, ErrorCode::InvalidConfig,
            "mask_threshold must lie in (0, 1)");
    require(text_tokens >= 1, ErrorCode::InvalidConfig, "text_tokens must be >= 1");
}

PipelineConfig apply_config(PipelineConfig cfg, const std::vector<ConfigEntry>& entries) {
    for (const auto& e : entries) {
        const std::string what = "config key '" + e.key + "' (line " + std::to_string(e.line) + ")";
        if (e.key == "patch_size") {
            cfg.patch_size = parse_int(e.value, what);
        } else if (e.key == "grid_cells") {
            int v = parse_int(e.value, what);
            require(v >= 0, ErrorCode::InvalidConfig, what + ": negative");
            cfg.grid_cells = static_cast<std::size_t>(v);
        } else if (e.key == "candidate_scales") {
            cfg.candidate_scales = parse_size_list(e.value, what);
        } else if (e.key == "compression_factor") {
            cfg.compression_factor = parse_int(e.value, what);
        } else if (e.key == "image_level_size") {
            cfg.image_level_size = parse_int(e.value, what);
        } else if (e.key == "fusion_weights") {
            cfg.fusion_weights = parse_double_list(e.value, what);
        } else if (e.key == "token_weights") {
            cfg.token_weights = parse_double_list(e.value, what);
        } else if (e.key == "mask_threshold") {
            cfg.mask_threshold = parse_double(e.value, what);
        } else if (e.key == "text_tokens") {
            int v = parse_int(e.value, what);
            require(v >= 0, ErrorCode::InvalidConfig, what + ": negative");
            cfg.text_tokens = static_cast<std::size_t>(v);
        } else {
            fail(ErrorCode::InvalidConfig, "unknown " + what);
        }
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    return apply_config(std::move(base), read_key_values(path));
}

}  // namespace magcrop
