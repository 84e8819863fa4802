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

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "residalign/data_model.hpp"

namespace testing {

using namespace residalign;

inline MatrixXd randn(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

inline double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("residalign-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline FeatureMatrix per_tr(const std::string& name, MatrixXd values,
                            std::vector<Index> offsets = {0}) {
  FeatureMatrix fm;
  fm.name = name;
  fm.sampling = Sampling::per_tr();
  fm.values = std::move(values);
  fm.story_offsets = std::move(offsets);
  return fm;
}

// Train on the first n_train rows, test on the rest.
inline std::vector<Split> head_train(Index n_rows, Index n_train) {
  std::vector<Split> s(static_cast<std::size_t>(n_rows), Split::test);
  for (Index i = 0; i < n_train; ++i) s[static_cast<std::size_t>(i)] = Split::train;
  return s;
}

}  // namespace testing
