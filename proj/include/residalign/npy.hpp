// Copyright 2026 The residalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign::npy {

/// Read a float64 (or float32, widened) NPY array. 1-D arrays load as n x 1.
/// Throws FormatError on anything else.
MatrixXd read(const std::filesystem::path& path);
std::vector<double> read_vector(const std::filesystem::path& path);

/// NPY v1.0 serialization of a 2-D little-endian float64 C-order array.
std::string encode(const MatrixXd& m);
std::string encode_vector(const std::vector<double>& v);
MatrixXd decode(const std::string& bytes, const std::string& origin = "<memory>");

/// Writes through a temporary file and rename.
void write(const std::filesystem::path& path, const MatrixXd& m);
void write_vector(const std::filesystem::path& path, const std::vector<double>& v);

}  // namespace residalign::npy
