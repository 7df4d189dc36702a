// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "magcrop/error.hpp"

namespace magcrop {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

float get_f32(const std::uint8_t* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    }
    return std::bit_cast<float>(bits);
}

// Element count of `shape`, or ShapeOverflow.
std::size_t checked_count(std::span<const std::size_t> shape) {
    require(shape.size() <= kMaxTensorRank, ErrorCode::ShapeOverflow,
            "rank " + std::to_string(shape.size()) + " exceeds " + std::to_string(kMaxTensorRank));
    std::size_t count = 1;
    for (std::size_t d : shape) {
        require(d > 0, ErrorCode::ShapeOverflow, "zero-sized dimension in shape " + shape_to_string(shape));
        require(count <= std::numeric_limits<std::size_t>::max() / 4 / d, ErrorCode::ShapeOverflow,
                "element count overflows for shape " + shape_to_string(shape));
        count *= d;
    }
    return count;
}

}  // namespace

std::size_t tensor_header_bytes(std::size_t rank) {
    return 4 + 1 + 1 + 8 + 8 * rank;
}

Tensor::Tensor() : m_data{0.0f} {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : m_shape(std::move(shape)), m_data(std::move(data)) {
    std::size_t count = checked_count(m_shape);
    require(count == m_data.size(), ErrorCode::ShapeMismatch,
            "shape " + shape_to_string(m_shape) + " needs " + std::to_string(count) + " elements, got " +
                std::to_string(m_data.size()));
    for (std::size_t i = 0; i < m_data.size(); ++i) {
        require(std::isfinite(m_data[i]), ErrorCode::NonFiniteElement,
                "element " + std::to_string(i) + " is not finite");
    }
}

std::vector<float> Tensor::release() && {
    std::vector<float> out = std::move(m_data);
    m_shape.clear();
    m_data = {0.0f};
    return out;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(tensor_header_bytes(t.rank()) + 4 * t.size());
    out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
    out.push_back(kTensorVersion);
    out.push_back(kDtypeFloat32);
    put_u64(out, t.rank());
    for (std::size_t d : t.shape()) {
        put_u64(out, d);
    }
    for (float f : t.data()) {
        put_f32(out, f);
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin) {
    require(bytes.size() >= 4 && std::memcmp(bytes.data(), kTensorMagic, 4) == 0, ErrorCode::BadMagic,
            origin + ": missing MAGT magic");
    require(bytes.size() >= tensor_header_bytes(0), ErrorCode::CorruptFile, origin + ": truncated header");
    require(bytes[4] == kTensorVersion, ErrorCode::UnsupportedVersion,
            origin + ": version " + std::to_string(bytes[4]));
    require(bytes[5] == kDtypeFloat32, ErrorCode::UnsupportedDtype,
            origin + ": dtype code " + std::to_string(bytes[5]));

    std::uint64_t rank = get_u64(bytes.data() + 6);
    require(rank <= kMaxTensorRank, ErrorCode::ShapeOverflow, origin + ": rank " + std::to_string(rank));
    std::size_t header = tensor_header_bytes(rank);
    require(bytes.size() >= header, ErrorCode::CorruptFile, origin + ": truncated shape");

    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        std::uint64_t d = get_u64(bytes.data() + 14 + 8 * i);
        require(d <= std::numeric_limits<std::size_t>::max(), ErrorCode::ShapeOverflow, origin + ": dim too large");
        shape[i] = static_cast<std::size_t>(d);
    }
    std::size_t count = checked_count(shape);
    require(count <= (bytes.size() - header) / 4, ErrorCode::ShapeOverflow,
            origin + ": shape " + shape_to_string(shape) + " exceeds payload");
    require(bytes.size() - header == 4 * count, ErrorCode::CorruptFile, origin + ": trailing bytes after payload");

    std::vector<float> data(count);
    const std::uint8_t* p = bytes.data() + header;
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = get_f32(p + 4 * i);
        require(std::isfinite(data[i]), ErrorCode::NonFiniteElement,
                origin + ": element " + std::to_string(i) + " is not finite");
    }
    return Tensor(std::move(shape), std::move(data));
}

Tensor read_tensor(const std::filesystem::path& path) {
    return decode_tensor(read_file_bytes(path), path.string());
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    write_file_bytes(encode_tensor(t), path);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::IoFailure, "read failed for " + path.string());
    return bytes;
}

void write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::IoFailure, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace magcrop
