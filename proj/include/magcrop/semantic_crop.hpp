// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "magcrop/heatmap.hpp"
#include "magcrop/image.hpp"

namespace magcrop {

/// Candidate lattice: the heatmap is pooled onto cells_per_axis x cells_per_axis cells and
/// square candidates of each scale (in cells) are enumerated.
class GridSpec {
public:
    GridSpec() : GridSpec(8, {1, 2, 3}) {}
    /// InvalidGrid unless cells_per_axis >= 2 and every scale is in [1, cells_per_axis].
    GridSpec(std::size_t cells_per_axis, std::vector<std::size_t> scales);

    std::size_t cells_per_axis() const noexcept { return m_cells; }
    /// Sorted ascending, duplicates removed.
    const std::vector<std::size_t>& scales() const noexcept { return m_scales; }

private:
    std::size_t m_cells;
    std::vector<std::size_t> m_scales;
};

/// Square box in cell coordinates: rows [row, row+size), cols [col, col+size).
struct CellBox {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t size = 1;

    friend bool operator==(const CellBox&, const CellBox&) = default;
};

/// Heatmap pooled onto a square cell lattice, row-major.
struct CellGrid {
    std::size_t cells = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * cells + c]; }
};

/// Output box of one cropping stage, in absolute pixel coordinates of the original image.
struct CropBox {
    PixelRect rect;
    int stage = 1;
    double score = 0.0;

    friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Average-pools `h` onto cells x cells. Cell k along an axis of length L covers
/// [floor(k*L/cells), floor((k+1)*L/cells)). HeatmapTooSmall if L < cells.
CellGrid pool_heatmap(const Heatmap& h, std::size_t cells);

/// Every in-bounds s x s box for each scale, ordered by (scale, row, col).
std::vector<CellBox> enumerate_candidates(std::size_t cells, std::span<const std::size_t> scales);
std::vector<CellBox> generate_candidates(const Heatmap& h, const GridSpec& g);

/// Box sum minus the mean sum of the up-to-8 same-size boxes shifted by one box extent in
/// each compass direction; shifts leaving the grid are skipped. A box with no in-grid
/// neighbour scores 0.
double score_candidate(const CellGrid& grid, const CellBox& box);

struct ScoredBox {
    CellBox box;
    double score = 0.0;
};

/// Highest score; ties go to the smaller box, then the top-most, then the left-most.
/// `candidates` must be non-empty.
ScoredBox best_candidate(const CellGrid& grid, std::span<const CellBox> candidates);

/// Maps a cell box onto `frame`, rounding edges outward.
PixelRect cell_box_to_pixels(const CellBox& box, std::size_t cells, const PixelRect& frame);

/// One cropping stage. Without a parent the heatmap covers the whole image; with a parent it
/// covers the parent crop, the result is absolute and strictly smaller than the parent, and
/// its stage is parent.stage + 1.
CropBox select_box(const Heatmap& h, const GridSpec& g, int image_width, int image_height,
                   const std::optional<CropBox>& parent = std::nullopt);

}  // namespace magcrop
