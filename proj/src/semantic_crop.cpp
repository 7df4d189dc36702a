// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/semantic_crop.hpp"

#include <algorithm>

#include "magcrop/error.hpp"

namespace magcrop {

namespace {

// Mean as anchor + mean offset, so a run of equal values averages to that value exactly.
class ExactMean {
public:
    void add(double v) {
        if (m_count == 0) {
            m_anchor = v;
        }
        m_offsets += v - m_anchor;
        ++m_count;
    }
    std::size_t count() const noexcept { return m_count; }
    double value() const noexcept { return m_count ? m_anchor + m_offsets / static_cast<double>(m_count) : 0.0; }

private:
    double m_anchor = 0.0;
    double m_offsets = 0.0;
    std::size_t m_count = 0;
};

double box_sum(const CellGrid& grid, std::size_t row, std::size_t col, std::size_t size) {
    double acc = 0.0;
    for (std::size_t r = row; r < row + size; ++r) {
        for (std::size_t c = col; c < col + size; ++c) {
            acc += grid.at(r, c);
        }
    }
    return acc;
}

// true if a ranks ahead of b under the selection order.
bool ranks_ahead(const ScoredBox& a, const ScoredBox& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.box.size != b.box.size) {
        return a.box.size < b.box.size;
    }
    if (a.box.row != b.box.row) {
        return a.box.row < b.box.row;
    }
    return a.box.col < b.box.col;
}

}  // namespace

GridSpec::GridSpec(std::size_t cells_per_axis, std::vector<std::size_t> scales)
    : m_cells(cells_per_axis), m_scales(std::move(scales)) {
    require(m_cells >= 2, ErrorCode::InvalidGrid, "cells_per_axis must be >= 2");
    require(!m_scales.empty(), ErrorCode::InvalidGrid, "at least one candidate scale is required");
    std::sort(m_scales.begin(), m_scales.end());
    m_scales.erase(std::unique(m_scales.begin(), m_scales.end()), m_scales.end());
    for (std::size_t s : m_scales) {
        require(s >= 1 && s <= m_cells, ErrorCode::InvalidGrid,
                "scale " + std::to_string(s) + " does not fit a " + std::to_string(m_cells) + "-cell grid");
    }
}

CellGrid pool_heatmap(const Heatmap& h, std::size_t cells) {
    require(h.rows >= cells && h.cols >= cells, ErrorCode::HeatmapTooSmall,
            "heatmap " + std::to_string(h.rows) + "x" + std::to_string(h.cols) + " is smaller than " +
                std::to_string(cells) + " cells per axis");
    CellGrid grid{cells, std::vector<double>(cells * cells)};
    for (std::size_t cr = 0; cr < cells; ++cr) {
        const std::size_t r0 = cr * h.rows / cells;
        const std::size_t r1 = (cr + 1) * h.rows / cells;
        for (std::size_t cc = 0; cc < cells; ++cc) {
            const std::size_t c0 = cc * h.cols / cells;
            const std::size_t c1 = (cc + 1) * h.cols / cells;
            ExactMean mean;
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) {
                    mean.add(h.at(r, c));
                }
            }
            grid.values[cr * cells + cc] = mean.value();
        }
    }
    return grid;
}

std::vector<CellBox> enumerate_candidates(std::size_t cells, std::span<const std::size_t> scales) {
    std::vector<CellBox> out;
    for (std::size_t s : scales) {
        if (s == 0 || s > cells) {
            continue;
        }
        for (std::size_t r = 0; r + s <= cells; ++r) {
            for (std::size_t c = 0; c + s <= cells; ++c) {
                out.push_back({r, c, s});
            }
        }
    }
    return out;
}

std::vector<CellBox> generate_candidates(const Heatmap& h, const GridSpec& g) {
    pool_heatmap(h, g.cells_per_axis());
    return enumerate_candidates(g.cells_per_axis(), g.scales());
}

double score_candidate(const CellGrid& grid, const CellBox& box) {
    const auto n = static_cast<long long>(grid.cells);
    const auto s = static_cast<long long>(box.size);
    const double inside = box_sum(grid, box.row, box.col, box.size);
    ExactMean neighbours;
    for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) {
                continue;
            }
            const long long r = static_cast<long long>(box.row) + dy * s;
            const long long c = static_cast<long long>(box.col) + dx * s;
            if (r < 0 || c < 0 || r + s > n || c + s > n) {
                continue;
            }
            neighbours.add(box_sum(grid, static_cast<std::size_t>(r), static_cast<std::size_t>(c), box.size));
        }
    }
    if (neighbours.count() == 0) {
        return 0.0;
    }
    return inside - neighbours.value();
}

ScoredBox best_candidate(const CellGrid& grid, std::span<const CellBox> candidates) {
    require(!candidates.empty(), ErrorCode::InvariantViolation, "no candidate boxes to choose from");
    ScoredBox best{candidates.front(), score_candidate(grid, candidates.front())};
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        ScoredBox current{candidates[i], score_candidate(grid, candidates[i])};
        if (ranks_ahead(current, best)) {
            best = current;
        }
    }
    return best;
}

PixelRect cell_box_to_pixels(const CellBox& box, std::size_t cells, const PixelRect& frame) {
    const auto n = static_cast<long long>(cells);
    const long long w = frame.width();
    const long long h = frame.height();
    auto lo = [n](long long k, long long extent) { return k * extent / n; };
    auto hi = [n](long long k, long long extent) { return std::min(extent, (k * extent + n - 1) / n); };
    const auto row = static_cast<long long>(box.row);
    const auto col = static_cast<long long>(box.col);
    const auto size = static_cast<long long>(box.size);
    return PixelRect{
        frame.x0 + static_cast<int>(lo(col, w)),
        frame.y0 + static_cast<int>(lo(row, h)),
        frame.x0 + static_cast<int>(hi(col + size, w)),
        frame.y0 + static_cast<int>(hi(row + size, h)),
    };
}

CropBox select_box(const Heatmap& h, const GridSpec& g, int image_width, int image_height,
                   const std::optional<CropBox>& parent) {
    require(image_width > 0 && image_height > 0, ErrorCode::ShapeMismatch, "image dimensions must be positive");
    const std::size_t cells = g.cells_per_axis();
    const CellGrid grid = pool_heatmap(h, cells);

    PixelRect frame{0, 0, image_width, image_height};
    int stage = 1;
    std::vector<CellBox> candidates;
    if (parent) {
        require(parent->rect.within(image_width, image_height), ErrorCode::BoxOutOfBounds,
                "parent box " + to_string(parent->rect) + " outside image");
        frame = parent->rect;
        stage = parent->stage + 1;
        // Only scales below the parent's own extent, and only boxes that actually shrink.
        for (const CellBox& b : enumerate_candidates(cells, g.scales())) {
            if (b.size < cells && cell_box_to_pixels(b, cells, frame).area() < frame.area()) {
                candidates.push_back(b);
            }
        }
        require(!candidates.empty(), ErrorCode::ParentTooSmall,
                "no candidate scale yields a box smaller than parent " + to_string(frame));
    } else {
        candidates = enumerate_candidates(cells, g.scales());
    }

    const ScoredBox best = best_candidate(grid, candidates);
    CropBox out{cell_box_to_pixels(best.box, cells, frame), stage, best.score};
    require(out.rect.within(image_width, image_height), ErrorCode::InvariantViolation,
            "selected box " + to_string(out.rect) + " escaped the image");
    if (parent) {
        require(parent->rect.contains(out.rect) && out.rect.area() < parent->rect.area(),
                ErrorCode::InvariantViolation, "stage box is not strictly inside its parent");
    }
    return out;
}

}  // namespace magcrop
