// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace magcrop {

enum class ErrorCode {
    // io_formats
    IoFailure,
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    ShapeOverflow,
    NonFiniteElement,
    CorruptFile,
    UnsupportedFormat,
    InvalidConfig,
    // shared shape / weight checks
    ShapeMismatch,
    SizeMismatch,
    NonFiniteWeight,
    WeightCountMismatch,
    WeightsNotNormalized,
    // attention_heatmap
    NotAGrid,
    InvalidAttention,
    // granularity_classifier
    EmptyQuery,
    // semantic_crop
    InvalidGrid,
    HeatmapTooSmall,
    ParentTooSmall,
    // resolution_adjust
    ImageTooSmall,
    BoxOutOfBounds,
    PlanMismatch,
    // seg_metrics
    EmptyEvaluation,
    EmptyGroundTruth,
    // synthetic_oracle
    TargetOutOfBounds,
    BadGrid,
    // pipeline
    MissingInput,
    InvariantViolation,
};

std::string_view error_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above. Codes other than
/// InvariantViolation describe bad input; InvariantViolation means the library broke its
/// own contract.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return m_code; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return m_detail; }
    bool is_input_error() const noexcept { return m_code != ErrorCode::InvariantViolation; }

private:
    ErrorCode m_code;
    std::string m_detail;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

}  // namespace magcrop
