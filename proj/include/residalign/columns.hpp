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

#include <vector>

#include "residalign/data_model.hpp"

// Column-wise statistics shared across modules.
namespace residalign::columns {

/// Population standard deviation treated as zero.
bool is_degenerate(double mean, double std);

VectorXd mean(const MatrixXd& m);
VectorXd population_std(const MatrixXd& m, const VectorXd& mean);

/// Pearson r per column pair. Columns where either side has zero variance
/// get r = 0 and are flagged in `degenerate` when it is non-null.
VectorXd pearson(const MatrixXd& a, const MatrixXd& b,
                 std::vector<bool>* degenerate = nullptr);

double pearson(const VectorXd& a, const VectorXd& b, bool* degenerate = nullptr);

}  // namespace residalign::columns
