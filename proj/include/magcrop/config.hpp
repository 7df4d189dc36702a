// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace magcrop {

/// One `key = value` line. Order and repeats are preserved.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Parses UTF-8 `key=value` lines. `#` starts a comment, blank lines are skipped, keys and
/// values are trimmed. Malformed lines raise InvalidConfig.
std::vector<ConfigEntry> parse_key_values(std::string_view text, const std::string& origin = "<config>");
std::vector<ConfigEntry> read_key_values(const std::filesystem::path& path);

int parse_int(std::string_view text, const std::string& what);
double parse_double(std::string_view text, const std::string& what);
/// Comma- or whitespace-separated list.
std::vector<double> parse_double_list(std::string_view text, const std::string& what);
std::vector<std::size_t> parse_size_list(std::string_view text, const std::string& what);

struct PipelineConfig {
    int patch_size = 14;
    std::size_t grid_cells = 8;
    std::vector<std::size_t> candidate_scales{1, 2, 3};
    int compression_factor = 4;
    int image_level_size = 100;
    std::vector<double> fusion_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    /// Empty means uniform over however many segmentation tokens are supplied.
    std::vector<double> token_weights;
    double mask_threshold = 0.5;
    std::size_t text_tokens = 8;

    /// InvalidConfig on any violated invariant.
    void validate() const;
};

/// Applies `entries` on top of `base`. Unknown keys raise InvalidConfig.
PipelineConfig apply_config(PipelineConfig base, const std::vector<ConfigEntry>& entries);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// |sum(w) - 1| <= 1e-6 and every weight >= 0.
bool weights_normalized(const std::vector<double>& w);

}  // namespace magcrop
