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

#include <span>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"
#include "residalign/ridge.hpp"

namespace residalign {

struct RemovalParams {
  std::vector<double> lambda_grid = default_lambda_grid();
  BootstrapParams bootstrap;
  LambdaScore score = LambdaScore::mse;
  std::uint64_t seed = 0;
};

struct RemovalRecord {
  std::string feature_name;
  std::string representation_name;
  RidgeModel model;  // standardized L -> standardized W
  VectorXd variance_explained_train;  // per W column, 1 - SSE/SST on train rows
  VectorXd variance_explained_test;   // held out; NaN for degenerate columns
  std::vector<bool> degenerate;       // W columns constant on either split

  std::string to_json() const;
};

struct RemovalResult {
  FeatureMatrix residual;
  RemovalRecord record;
};

/// Both matrices are standardized per split, theta is fitted on train rows
/// (standardized L -> standardized W) and the fitted part is subtracted from
/// W in its own units: residual = W - sd_split(W) * (zL theta). The residual
/// keeps W's split means, so removing the same feature again is a no-op.
RemovalResult remove_feature(const FeatureMatrix& L, const FeatureMatrix& W,
                             std::span<const Split> split, const RemovalParams& params);

/// Column-wise concatenation for joint removal. Rows and story offsets must agree.
FeatureMatrix concat_features(std::span<const FeatureMatrix> parts, const std::string& name);

}  // namespace residalign
