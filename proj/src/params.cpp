// Copyright (C) 2026 The magcrop authors
// SPDX-License-Identifier: Apache-2.0

#include "magcrop/params.hpp"

#include <fstream>
#include <sstream>

#include "magcrop/error.hpp"

namespace magcrop {

ParameterSet read_parameter_dir(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kParameterManifest;
    std::ifstream in(manifest_path);
    require(in.good(), ErrorCode::IoFailure, "cannot open " + manifest_path.string());

    ParameterSet params;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string name;
        if (!(fields >> name) || name.front() == '#') {
            continue;
        }
        std::vector<std::size_t> shape;
        long long d = 0;
        while (fields >> d) {
            require(d > 0, ErrorCode::ShapeOverflow,
                    manifest_path.string() + ":" + std::to_string(line_no) + ": non-positive dimension");
            shape.push_back(static_cast<std::size_t>(d));
        }
        require(fields.eof(), ErrorCode::CorruptFile,
                manifest_path.string() + ":" + std::to_string(line_no) + ": malformed shape");
        require(!params.contains(name), ErrorCode::CorruptFile,
                manifest_path.string() + ": duplicate parameter " + name);

        Tensor t = read_tensor(dir / (name + ".magt"));
        require(t.shape() == shape, ErrorCode::ShapeMismatch,
                name + ": manifest says " + shape_to_string(shape) + ", file holds " + shape_to_string(t.shape()));
        params.emplace(name, std::move(t));
    }
    return params;
}

void write_parameter_dir(const ParameterSet& params, const std::vector<std::string>& names,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    for (const auto& name : names) {
        auto it = params.find(name);
        require(it != params.end(), ErrorCode::MissingInput, "parameter " + name + " not in set");
        write_tensor(it->second, dir / (name + ".magt"));
        manifest << name;
        for (std::size_t d : it->second.shape()) {
            manifest << ' ' << d;
        }
        manifest << '\n';
    }
    const std::string text = manifest.str();
    write_file_bytes(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                     dir / kParameterManifest);
}

const Tensor& expect_parameter(const ParameterSet& params, const std::string& name,
                               const std::vector<std::size_t>& shape) {
    auto it = params.find(name);
    require(it != params.end(), ErrorCode::MissingInput, "missing parameter " + name);
    require(it->second.shape() == shape, ErrorCode::ShapeMismatch,
            name + ": expected " + shape_to_string(shape) + ", got " + shape_to_string(it->second.shape()));
    return it->second;
}

}  // namespace magcrop
