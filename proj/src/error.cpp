// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/error.hpp"

namespace magcrop {

std::string_view error_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::ShapeOverflow: return "ShapeOverflow";
    case ErrorCode::NonFiniteElement: return "NonFiniteElement";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::WeightCountMismatch: return "WeightCountMismatch";
    case ErrorCode::WeightsNotNormalized: return "WeightsNotNormalized";
    case ErrorCode::NotAGrid: return "NotAGrid";
    case ErrorCode::InvalidAttention: return "InvalidAttention";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::HeatmapTooSmall: return "HeatmapTooSmall";
    case ErrorCode::ParentTooSmall: return "ParentTooSmall";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::TargetOutOfBounds: return "TargetOutOfBounds";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), m_code(code), m_detail(message) {}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace magcrop
