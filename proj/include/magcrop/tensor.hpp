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

// MAGT tensor files (all integers little-endian):
//    magic        - "MAGT" (4 bytes)
//    version      - u8, currently 1
//    dtype        - u8, 1 = float32
//    rank         - u64
//    dims         - rank x u64, each >= 1
//    payload      - product(dims) x float32, row-major
//
// A rank-0 tensor is a scalar holding one element.

inline constexpr char kTensorMagic[4] = {'M', 'A', 'G', 'T'};
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kMaxTensorRank = 16;

std::size_t tensor_header_bytes(std::size_t rank);

/// Dense float32 tensor. Shape and contents are validated on construction: every dim is
/// positive, the element count matches, and every element is finite.
class Tensor {
public:
    /// Scalar 0.0.
    Tensor();
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    const std::vector<std::size_t>& shape() const noexcept { return m_shape; }
    std::size_t rank() const noexcept { return m_shape.size(); }
    std::size_t size() const noexcept { return m_data.size(); }
    std::span<const float> data() const noexcept { return m_data; }
    std::size_t dim(std::size_t axis) const { return m_shape.at(axis); }

    /// Moves the element buffer out, leaving a scalar 0.0.
    std::vector<float> release() &&;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> m_shape;
    std::vector<float> m_data;
};

std::string shape_to_string(std::span<const std::size_t> shape);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

// Raw file helpers shared by the other readers and writers.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path);

}  // namespace magcrop
