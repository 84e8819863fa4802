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

#include <string>
#include <vector>

#include "residalign/data_model.hpp"
#include "residalign/ridge.hpp"
#include "residalign/temporal.hpp"

namespace residalign {

struct EncodingParams {
  std::vector<double> lambda_grid = default_lambda_grid();
  BootstrapParams bootstrap;
  LambdaScore score = LambdaScore::mse;
  DelaySpec delays;
  bool fir = true;  // off for predictors that are already lagged responses
  std::uint64_t seed = 0;
};

struct PearsonResult {
  VectorXd r;
  std::vector<bool> degenerate;
};

struct EncodingResult {
  std::string subject_id;
  Modality modality = Modality::listening;
  std::string feature_name;
  VectorXd r;                    // per voxel, test rows
  std::vector<bool> degenerate;  // zero-variance prediction or response
  RidgeModel model;
  MatrixXd test_pred;            // test rows x voxels
  MatrixXd test_actual;          // standardized test responses
  std::vector<Index> test_offsets;  // story starts within the test rows
};

/// Pearson r per column; a zero-variance column on either side gives 0.
PearsonResult pearson_per_voxel(const MatrixXd& pred, const MatrixXd& actual);

/// Design matrix used by fit_encoding: split z-score, FIR delays, split
/// z-score again so every delayed copy is standardized.
MatrixXd encoding_design(const MatrixXd& X, std::span<const Split> split,
                         std::span<const Index> story_offsets, const EncodingParams& params);

/// zscore -> FIR -> zscore -> bootstrap ridge on train rows -> Pearson r on
/// test rows against the split-standardized responses.
EncodingResult fit_encoding(const FeatureMatrix& X, const ResponseMatrix& Y,
                            const EncodingParams& params);

/// Same pipeline for a raw predictor matrix.
EncodingResult fit_encoding(const MatrixXd& X, const ResponseMatrix& Y,
                            const EncodingParams& params);

inline constexpr double kPercentDecreaseEps = 0.01;

struct PercentDecrease {
  VectorXd value;               // NaN where undefined
  std::vector<bool> undefined;  // r_before <= eps
};

/// 100 (before - after) / before, at most 100, defined where before > eps.
PercentDecrease percent_decrease(const VectorXd& before, const VectorXd& after,
                                 double eps = kPercentDecreaseEps);

}  // namespace residalign
