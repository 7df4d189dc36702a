// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace magcrop {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    long long area() const noexcept { return static_cast<long long>(width()) * height(); }
    bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
    bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool contains(const PixelRect& r) const noexcept {
        return r.x0 >= x0 && r.y0 >= y0 && r.x1 <= x1 && r.y1 <= y1;
    }
    bool within(int width, int height) const noexcept {
        return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1 && x1 <= width && y1 <= height;
    }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

std::string to_string(const PixelRect& r);

/// 8-bit raster, row-major, channels interleaved. Gray (1 channel) or RGB (3 channels).
class ImagePlane {
public:
    ImagePlane() = default;
    ImagePlane(int width, int height, int channels, std::uint8_t fill = 0);
    ImagePlane(int width, int height, int channels, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return m_width; }
    int height() const noexcept { return m_height; }
    int channels() const noexcept { return m_channels; }
    PixelRect bounds() const noexcept { return {0, 0, m_width, m_height}; }

    std::span<const std::uint8_t> pixels() const noexcept { return m_pixels; }
    std::span<std::uint8_t> pixels() noexcept { return m_pixels; }

    std::uint8_t at(int x, int y, int c = 0) const { return m_pixels[index(x, y, c)]; }
    std::uint8_t& at(int x, int y, int c = 0) { return m_pixels[index(x, y, c)]; }

    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * m_width + x) * m_channels + c;
    }

    int m_width = 0;
    int m_height = 0;
    int m_channels = 1;
    std::vector<std::uint8_t> m_pixels;
};

/// Copy of the pixels inside `r`; BoxOutOfBounds unless r lies within the image.
ImagePlane crop(const ImagePlane& img, const PixelRect& r);

std::vector<std::uint8_t> encode_png(const ImagePlane& img);
ImagePlane decode_png(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

ImagePlane read_image(const std::filesystem::path& path);
void write_image(const ImagePlane& img, const std::filesystem::path& path);

}  // namespace magcrop
