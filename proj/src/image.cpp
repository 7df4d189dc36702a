// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

#include "magcrop/error.hpp"
#include "magcrop/tensor.hpp"

namespace magcrop {

namespace {

void check_dims(int width, int height, int channels) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch,
            "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    require(channels == 1 || channels == 3, ErrorCode::ShapeMismatch,
            "image must have 1 or 3 channels, got " + std::to_string(channels));
}

// Releases the libpng simplified-API state on every exit path.
struct PngImage {
    png_image image{};
    PngImage() { image.version = PNG_IMAGE_VERSION; }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

std::string to_string(const PixelRect& r) {
    return std::to_string(r.x0) + "," + std::to_string(r.y0) + "," + std::to_string(r.x1) + "," +
           std::to_string(r.y1);
}

ImagePlane::ImagePlane(int width, int height, int channels, std::uint8_t fill)
    : m_width(width), m_height(height), m_channels(channels) {
    check_dims(width, height, channels);
    m_pixels.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImagePlane::ImagePlane(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : m_width(width), m_height(height), m_channels(channels), m_pixels(std::move(pixels)) {
    check_dims(width, height, channels);
    require(m_pixels.size() == static_cast<std::size_t>(width) * height * channels, ErrorCode::SizeMismatch,
            "pixel buffer holds " + std::to_string(m_pixels.size()) + " bytes, expected " +
                std::to_string(static_cast<std::size_t>(width) * height * channels));
}

ImagePlane crop(const ImagePlane& img, const PixelRect& r) {
    require(r.within(img.width(), img.height()), ErrorCode::BoxOutOfBounds,
            "crop " + to_string(r) + " outside " + std::to_string(img.width()) + "x" + std::to_string(img.height()));
    ImagePlane out(r.width(), r.height(), img.channels());
    const std::size_t row_bytes = static_cast<std::size_t>(r.width()) * img.channels();
    for (int y = 0; y < r.height(); ++y) {
        const std::size_t offset = (static_cast<std::size_t>(r.y0 + y) * img.width() + r.x0) * img.channels();
        std::memcpy(&out.at(0, y), img.pixels().data() + offset, row_bytes);
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const ImagePlane& img) {
    PngImage png;
    png.image.width = static_cast<png_uint_32>(img.width());
    png.image.height = static_cast<png_uint_32>(img.height());
    png.image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    require(png_image_write_to_memory(&png.image, nullptr, &size, 0, img.pixels().data(), 0, nullptr) != 0,
            ErrorCode::IoFailure, std::string("png sizing failed: ") + png.image.message);
    std::vector<std::uint8_t> out(size);
    require(png_image_write_to_memory(&png.image, out.data(), &size, 0, img.pixels().data(), 0, nullptr) != 0,
            ErrorCode::IoFailure, std::string("png encode failed: ") + png.image.message);
    out.resize(size);
    return out;
}

ImagePlane decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
    require(bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0, ErrorCode::UnsupportedFormat,
            origin + ": not a PNG file");

    PngImage png;
    require(png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size()) != 0, ErrorCode::CorruptFile,
            origin + ": " + png.image.message);
    const png_uint_32 format = png.image.format;
    require((format & PNG_FORMAT_FLAG_LINEAR) == 0, ErrorCode::UnsupportedFormat,
            origin + ": only 8-bit PNG is supported");
    require((format & (PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_COLORMAP)) == 0, ErrorCode::UnsupportedFormat,
            origin + ": only gray or RGB PNG without alpha or palette is supported");

    const int channels = (format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
    png.image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    require(png.image.width > 0 && png.image.height > 0 && png.image.width <= (1u << 30) / png.image.height,
            ErrorCode::CorruptFile, origin + ": implausible dimensions");
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png.image));
    require(png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr) != 0, ErrorCode::CorruptFile,
            origin + ": " + png.image.message);
    return ImagePlane(static_cast<int>(png.image.width), static_cast<int>(png.image.height), channels,
                      std::move(pixels));
}

ImagePlane read_image(const std::filesystem::path& path) {
    return decode_png(read_file_bytes(path), path.string());
}

void write_image(const ImagePlane& img, const std::filesystem::path& path) {
    write_file_bytes(encode_png(img), path);
}

}  // namespace magcrop
