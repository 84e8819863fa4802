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

#include "residalign/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "residalign/columns.hpp"
#include "residalign/error.hpp"

namespace residalign {

PearsonResult pearson_per_voxel(const MatrixXd& pred, const MatrixXd& actual) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols()) {
    throw ValidationError("pearson: prediction is " + std::to_string(pred.rows()) + "x" +
                          std::to_string(pred.cols()) + ", responses are " +
                          std::to_string(actual.rows()) + "x" + std::to_string(actual.cols()));
  }
  if (pred.rows() < 2) throw ValidationError("pearson: need at least 2 rows");
  PearsonResult out;
  out.r = columns::pearson(pred, actual, &out.degenerate);
  return out;
}

MatrixXd encoding_design(const MatrixXd& X, std::span<const Split> split,
                         std::span<const Index> story_offsets, const EncodingParams& params) {
  const MatrixXd z = zscore_split(X, split).values;
  if (!params.fir) return z;
  return zscore_split(fir_expand(z, params.delays, story_offsets), split).values;
}

EncodingResult fit_encoding(const MatrixXd& X, const ResponseMatrix& Y,
                            const EncodingParams& params) {
  if (X.rows() != Y.n_trs()) {
    throw ValidationError("encoding: features have " + std::to_string(X.rows()) +
                          " rows, responses of '" + Y.subject_id + "' have " +
                          std::to_string(Y.n_trs()));
  }
  const auto rows = split_rows(Y.split);
  if (rows.train.empty() || rows.test.empty()) {
    throw ComputeError("encoding: '" + Y.subject_id + "' needs both train and test rows");
  }
  const MatrixXd design = encoding_design(X, Y.split, Y.story_offsets, params);
  const MatrixXd resp = zscore_split(Y.values, Y.split).values;
  const auto train_offsets = subset_story_offsets(Y.story_offsets, Y.n_trs(), rows.train);
  auto fit = bootstrap_ridge(take_rows(design, rows.train), take_rows(resp, rows.train),
                             params.lambda_grid, params.bootstrap, params.seed, train_offsets,
                             params.score);
  EncodingResult out;
  out.subject_id = Y.subject_id;
  out.modality = Y.modality;
  out.model = std::move(fit.model);
  out.test_pred = predict(out.model, take_rows(design, rows.test));
  out.test_actual = take_rows(resp, rows.test);
  out.test_offsets = subset_story_offsets(Y.story_offsets, Y.n_trs(), rows.test);
  auto pr = pearson_per_voxel(out.test_pred, out.test_actual);
  out.r = std::move(pr.r);
  out.degenerate = std::move(pr.degenerate);
  return out;
}

EncodingResult fit_encoding(const FeatureMatrix& X, const ResponseMatrix& Y,
                            const EncodingParams& params) {
  if (X.sampling.kind != SamplingKind::per_tr) {
    throw ValidationError("encoding: '" + X.name + "' must be aligned to TRs first");
  }
  if (X.story_offsets != Y.story_offsets) {
    throw ValidationError("encoding: story offsets of '" + X.name + "' and '" + Y.subject_id +
                          "' disagree");
  }
  auto out = fit_encoding(X.values, Y, params);
  out.feature_name = X.name;
  return out;
}

PercentDecrease percent_decrease(const VectorXd& before, const VectorXd& after, double eps) {
  if (before.size() != after.size()) {
    throw ValidationError("percent_decrease: " + std::to_string(before.size()) + " vs " +
                          std::to_string(after.size()) + " voxels");
  }
  PercentDecrease out;
  out.value = VectorXd::Constant(before.size(), std::numeric_limits<double>::quiet_NaN());
  out.undefined.assign(static_cast<std::size_t>(before.size()), true);
  for (Index v = 0; v < before.size(); ++v) {
    if (!(before(v) > eps) || !std::isfinite(after(v))) continue;
    out.value(v) = std::min(100.0, 100.0 * (before(v) - after(v)) / before(v));
    out.undefined[v] = false;
  }
  return out;
}

}  // namespace residalign
