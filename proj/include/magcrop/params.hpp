// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "magcrop/tensor.hpp"

namespace magcrop {

// A parameter directory holds one MAGT file per named parameter plus `manifest.txt`, one
// line per parameter:
//
//    <name> <dim0> <dim1> ...
//
// The tensor for <name> lives in `<name>.magt`. Loading checks every file against the
// manifest shape.

inline constexpr const char* kParameterManifest = "manifest.txt";

using ParameterSet = std::map<std::string, Tensor>;

ParameterSet read_parameter_dir(const std::filesystem::path& dir);

/// Writes `params` in the order given by `names` (every name must be present).
void write_parameter_dir(const ParameterSet& params, const std::vector<std::string>& names,
                         const std::filesystem::path& dir);

/// Looks up `name` and checks its shape; ShapeMismatch otherwise.
const Tensor& expect_parameter(const ParameterSet& params, const std::string& name,
                               const std::vector<std::size_t>& shape);

}  // namespace magcrop
