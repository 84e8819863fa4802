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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign {

// --- normalized alignment --------------------------------------------------

enum class NormalizeMode {
  per_voxel,       // mean over the mask of r / ceiling
  ratio_of_means,  // mean r over the mask divided by mean ceiling
};
NormalizeMode normalize_mode_from_string(std::string_view s);
std::string_view to_string(NormalizeMode m);

inline constexpr double kDefaultCeilingThreshold = 0.05;

struct RoiValue {
  std::string group;
  double mean = 0.0;  // NaN when empty
  Index count = 0;
  bool empty = true;
};

struct AlignmentReport {
  VectorXd r;
  VectorXd ceiling;
  std::vector<bool> mask;  // ceiling >= threshold
  VectorXd normalized;     // r / ceiling on the mask, NaN elsewhere
  double subject_mean = 0.0;
  std::vector<RoiValue> roi;
  double threshold = kDefaultCeilingThreshold;
};

/// Unweighted mean of `values` over masked members of each group. An empty
/// mask argument selects every voxel.
std::vector<RoiValue> roi_aggregate(const VectorXd& values, const std::vector<bool>& mask,
                                    const RoiAtlas& atlas, std::span<const std::string> groups);

/// Throws ComputeError when no voxel reaches the threshold. `atlas` may be
/// null, in which case only the subject-level mean is reported.
AlignmentReport normalize_alignment(const VectorXd& r, const VectorXd& ceiling,
                                    double threshold = kDefaultCeilingThreshold,
                                    const RoiAtlas* atlas = nullptr,
                                    std::span<const std::string> groups = {},
                                    NormalizeMode mode = NormalizeMode::per_voxel);

// --- block permutation -----------------------------------------------------

/// Row order with whole blocks of `block_len` shuffled inside each story.
/// A story's trailing partial block is its own block.
std::vector<Index> permute_blocks(Index n_rows, std::span<const Index> story_offsets,
                                  Index block_len, std::uint64_t seed);

enum class PermutationMode { aggregate, per_voxel };
PermutationMode permutation_mode_from_string(std::string_view s);

struct PermutationParams {
  Index block_len = 10;
  int n_permutations = 5000;
  PermutationMode mode = PermutationMode::aggregate;
  std::uint64_t seed = 0;
};

struct PermutationResult {
  double observed = 0.0;  // mean masked Pearson r
  double p = 1.0;
  VectorXd voxel_observed;  // per_voxel mode only
  VectorXd voxel_p;
};

/// Prediction rows are permuted block-wise; p = (1 + #{null >= observed}) /
/// (1 + n_permutations). `mask` may be empty (all voxels).
PermutationResult block_permutation_test(const MatrixXd& pred, const MatrixXd& actual,
                                         std::span<const Index> story_offsets,
                                         const std::vector<bool>& mask,
                                         const PermutationParams& params);

// --- Wilcoxon --------------------------------------------------------------

enum class Alternative { two_sided, greater, less };
Alternative alternative_from_string(std::string_view s);

inline constexpr int kWilcoxonExactMax = 25;

struct WilcoxonResult {
  double w_plus = 0.0;  // sum of positive midranks
  Index n = 0;          // non-zero differences
  double p = 1.0;
  bool exact = true;
  bool all_zero = false;
};

/// Signed-rank test of differences a - b (zero differences dropped, ties
/// midranked). Exact null distribution up to kWilcoxonExactMax pairs, normal
/// approximation with tie and continuity corrections above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences,
                                    Alternative alt = Alternative::two_sided);
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    Alternative alt = Alternative::two_sided);

// --- feature correlation ---------------------------------------------------

struct CorrelationMatrix {
  std::vector<std::string> names;
  MatrixXd r;
  std::vector<bool> degenerate;
};

/// Pairwise Pearson of dim-1 per-TR features; zero-variance features get a
/// zero row/column (diagonal included) and a flag.
CorrelationMatrix feature_correlation(std::span<const FeatureMatrix> features);

/// First principal component scores of a multi-column feature (sign fixed
/// so the loading with the largest magnitude is positive).
FeatureMatrix first_principal_component(const FeatureMatrix& fm);

}  // namespace residalign
