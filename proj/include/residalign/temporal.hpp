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
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign {

/// FIR delays in TRs, strictly ascending and positive.
struct DelaySpec {
  std::vector<Index> delays{1, 2, 3, 4, 5, 6};

  static DelaySpec first_n(int n);
  void validate() const;
};

/// Per-story TR grid. TR k of a story spans [k*tr, (k+1)*tr) in story-local
/// seconds and is sampled at its centre.
struct TrGrid {
  double tr_seconds = kDefaultTrSeconds;
  std::vector<Index> story_trs;

  Index total() const;
  std::vector<Index> offsets() const;
  std::vector<double> centres(std::size_t story) const;
  /// TR index within a story for a story-local time, or -1 when outside.
  Index bin(std::size_t story, double t) const;
};

/// Lanczos window: sinc(2 fc t) * sinc(2 fc t / lobes) inside |2 fc t| < lobes.
double lanczos_kernel(double t, double cutoff_hz, int lobes);

/// Each output row is the kernel-weighted mean of source rows; rows with no
/// kernel support are zero. cutoff_hz <= 0 selects the Nyquist rate of the
/// target grid spacing (0.5 / tr_seconds, inferred from the target times).
MatrixXd lanczos_downsample(const MatrixXd& values, std::span<const double> source_times,
                            std::span<const double> target_times, int lobes = 3,
                            double cutoff_hz = 0.0);

/// Resample a frame-rate or irregular FeatureMatrix onto a TR grid story by
/// story. Per-TR input passes through after a row-count check.
FeatureMatrix align_to_tr(const FeatureMatrix& src, const TrGrid& grid, int lobes = 3);

/// Block k of row t holds X[t - delays[k]] when that row lies in t's story,
/// else zeros.
MatrixXd fir_expand(const MatrixXd& X, const DelaySpec& spec,
                    std::span<const Index> story_offsets);

struct ZStats {
  VectorXd train_mean, train_std, test_mean, test_std;
  std::vector<bool> train_degenerate, test_degenerate;
};

struct Standardized {
  MatrixXd values;
  ZStats stats;
};

/// Train rows standardized by train statistics, test rows by test
/// statistics (population std). Zero-variance columns become zeros and are
/// flagged. Throws if either split is empty.
Standardized zscore_split(const MatrixXd& X, std::span<const Split> split);

}  // namespace residalign
