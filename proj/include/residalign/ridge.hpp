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
#include <filesystem>
#include <span>
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign {

/// Fitted coefficients with the standardization applied by predict():
///   y = ((x - x_mean) / x_std) * weights .* y_std + y_mean
/// A zero entry in x_std marks a degenerate input column (contributes 0).
struct RidgeModel {
  MatrixXd weights;            // dim_in x dim_out
  VectorXd lambda_per_target;  // dim_out
  VectorXd x_mean, x_std;      // dim_in
  VectorXd y_mean, y_std;      // dim_out

  Index dim_in() const { return weights.rows(); }
  Index dim_out() const { return weights.cols(); }

  /// Sets identity standardization for the current weight shape.
  void reset_standardization();

  void save(const std::filesystem::path& prefix) const;
  static RidgeModel load(const std::filesystem::path& prefix);
};

/// Economy SVD of a design matrix, shared by every lambda of a sweep.
class RidgeSolver {
 public:
  explicit RidgeSolver(const MatrixXd& X);

  Index rank_dim() const { return singular_values_.size(); }
  const VectorXd& singular_values() const { return singular_values_; }

  /// Projection U^T Y used by the sweep helpers below.
  MatrixXd project(const MatrixXd& Y) const;

  MatrixXd weights(const MatrixXd& Y, double lambda) const;
  /// Column j of the result uses lambdas[j].
  MatrixXd weights(const MatrixXd& Y, const VectorXd& lambdas) const;

  /// Predictions for rows `X_other` (same columns as the factored matrix),
  /// given the projection `UtY`, for one lambda.
  MatrixXd predict_other(const MatrixXd& XV, const MatrixXd& UtY, double lambda) const;
  /// X_other * V, the reusable half of predict_other.
  MatrixXd rotate(const MatrixXd& X_other) const;

 private:
  MatrixXd U_;
  VectorXd singular_values_;
  MatrixXd V_;
};

/// Minimizes ||Y - X theta||_F^2 + lambda ||theta||_F^2. No centering.
RidgeModel ridge_fit(const MatrixXd& X, const MatrixXd& Y, double lambda);

MatrixXd predict(const RidgeModel& model, const MatrixXd& X);

struct BootstrapParams {
  int n_boots = 50;
  Index chunk_len = 40;
  double holdout_frac = 0.2;
};

/// How held-out predictions rank the lambda grid.
enum class LambdaScore { pearson, mse };

struct BootstrapFit {
  RidgeModel model;
  MatrixXd mean_score;  // grid.size() x dim_out, averaged over iterations
  std::vector<std::size_t> selected;  // grid index per target
};

/// Contiguous chunks of `chunk_len` rows that never cross a story start; a
/// story's trailing partial chunk is its own chunk.
std::vector<std::pair<Index, Index>> make_chunks(Index n_rows,
                                                 std::span<const Index> story_offsets,
                                                 Index chunk_len);

/// Number of chunks held out per iteration.
Index held_out_chunk_count(Index n_rows, Index n_chunks, const BootstrapParams& params);

/// Row indices held out in one iteration.
std::vector<Index> draw_holdout(const std::vector<std::pair<Index, Index>>& chunks,
                                Index n_held, std::uint64_t seed);

/// Per-target lambda chosen by held-out score over bootstrap iterations,
/// then refit on every row.
BootstrapFit bootstrap_ridge(const MatrixXd& X, const MatrixXd& Y,
                             std::span<const double> grid,
                             const BootstrapParams& params, std::uint64_t seed,
                             std::span<const Index> story_offsets = {},
                             LambdaScore score = LambdaScore::mse);

/// 1 - SSE/SST per column; NaN where the target column has zero variance.
VectorXd r2_per_column(const MatrixXd& pred, const MatrixXd& target);

struct ProbeResult {
  VectorXd r2;                 // per target column of L
  std::vector<bool> undefined;  // zero-variance test target
};

/// Ridge probe from representation W to low-level feature L: fit on train
/// rows, report held-out R^2.
ProbeResult probe_r2(const FeatureMatrix& W, const FeatureMatrix& L,
                     std::span<const double> grid, std::span<const Split> split,
                     const BootstrapParams& params, std::uint64_t seed);

/// n values log-spaced over [lo, hi], inclusive.
std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> default_lambda_grid();

}  // namespace residalign
