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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"
#include "residalign/ridge.hpp"

namespace residalign {

/// How the other subjects' responses become predictors of a target voxel.
enum class CeilingPredictor {
  all_voxels,     // every voxel of every subject in the subset
  matched_voxel,  // only the same voxel index of each subset member
};
CeilingPredictor ceiling_predictor_from_string(std::string_view s);
std::string_view to_string(CeilingPredictor p);

struct CeilingParams {
  std::vector<double> lambda_grid = default_lambda_grid();
  BootstrapParams bootstrap;
  LambdaScore score = LambdaScore::mse;
  CeilingPredictor predictor = CeilingPredictor::all_voxels;
  Index pca_components = 0;  // 0 keeps every predictor column
  int min_subset_size = 2;   // s counts the target, so s - 1 predictors
  int max_subset_size = 0;   // 0 means all subjects
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CeilingMap {
  std::string subject_id;
  Modality modality = Modality::listening;
  VectorXd ceiling;                // pooled over subsets, floored at 0
  std::map<int, VectorXd> by_size;  // mean r per subset size s (not floored)
  std::map<int, int> subsets_per_size;
  std::string scheme;
};

/// Each subject is predicted from every subset of the other subjects of size
/// s - 1 for s in [min, max]. Subsets use the standard encoding pipeline
/// without FIR delays; pooled ceiling = unweighted mean r over all subsets.
std::vector<CeilingMap> cross_subject_ceiling(std::span<const ResponseMatrix> responses,
                                              const CeilingParams& params);

/// Combinations of `k` indices out of `pool`, in lexicographic order.
std::vector<std::vector<std::size_t>> combinations(const std::vector<std::size_t>& pool,
                                                   std::size_t k);

/// Projection of train+test rows onto the top-k principal axes of the train
/// rows. Returns X unchanged when k <= 0 or k >= cols.
MatrixXd pca_reduce(const MatrixXd& X, std::span<const Index> train_rows, Index k);

}  // namespace residalign
