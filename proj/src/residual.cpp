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

#include "residalign/residual.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

#include "residalign/error.hpp"
#include "residalign/temporal.hpp"

namespace residalign {

namespace {

nlohmann::json finite_or_null(const VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

}  // namespace

std::string RemovalRecord::to_json() const {
  std::vector<double> lambdas(model.lambda_per_target.data(),
                              model.lambda_per_target.data() + model.lambda_per_target.size());
  nlohmann::json j{{"feature", feature_name},
                   {"representation", representation_name},
                   {"lambda_per_column", lambdas},
                   {"variance_explained_train", finite_or_null(variance_explained_train)},
                   {"variance_explained_test", finite_or_null(variance_explained_test)},
                   {"degenerate_columns", degenerate}};
  return j.dump(1) + "\n";
}

RemovalResult remove_feature(const FeatureMatrix& L, const FeatureMatrix& W,
                             std::span<const Split> split, const RemovalParams& params) {
  if (L.n_rows() != W.n_rows()) {
    throw ValidationError("remove '" + L.name + "' from '" + W.name + "': " +
                          std::to_string(L.n_rows()) + " vs " + std::to_string(W.n_rows()) +
                          " rows");
  }
  if (L.story_offsets != W.story_offsets) {
    throw ValidationError("remove '" + L.name + "' from '" + W.name +
                          "': story offsets disagree");
  }
  if (static_cast<Index>(split.size()) != W.n_rows()) {
    throw ValidationError("remove: split has " + std::to_string(split.size()) +
                          " entries for " + std::to_string(W.n_rows()) + " rows");
  }
  const auto rows = split_rows(split);
  if (L.dim() >= static_cast<Index>(rows.train.size())) {
    throw ComputeError("remove '" + L.name + "': feature dim " + std::to_string(L.dim()) +
                       " >= " + std::to_string(rows.train.size()) +
                       " training rows (underdetermined)");
  }
  const auto zl = zscore_split(L.values, split);
  const auto zw = zscore_split(W.values, split);
  const auto train_offsets = subset_story_offsets(W.story_offsets, W.n_rows(), rows.train);
  auto fit = bootstrap_ridge(take_rows(zl.values, rows.train), take_rows(zw.values, rows.train),
                             params.lambda_grid, params.bootstrap, params.seed, train_offsets,
                             params.score);

  const MatrixXd fitted = zl.values * fit.model.weights;  // standardized W units
  RemovalResult out;
  out.residual.name = W.name + "-minus-" + L.name;
  out.residual.sampling = W.sampling;
  out.residual.story_offsets = W.story_offsets;
  out.residual.values = W.values;
  const std::vector<Split> per_row(split.begin(), split.end());
  for (Index i = 0; i < W.n_rows(); ++i) {
    const bool train = per_row[i] == Split::train;
    const VectorXd& sd = train ? zw.stats.train_std : zw.stats.test_std;
    const auto& degenerate = train ? zw.stats.train_degenerate : zw.stats.test_degenerate;
    for (Index c = 0; c < W.dim(); ++c) {
      if (!degenerate[c]) out.residual.values(i, c) -= sd(c) * fitted(i, c);
    }
  }

  auto& rec = out.record;
  rec.feature_name = L.name;
  rec.representation_name = W.name;
  rec.model = fit.model;
  rec.degenerate.resize(static_cast<std::size_t>(W.dim()));
  for (Index c = 0; c < W.dim(); ++c) {
    rec.degenerate[c] = zw.stats.train_degenerate[c] || zw.stats.test_degenerate[c];
  }
  rec.variance_explained_train =
      r2_per_column(take_rows(fitted, rows.train), take_rows(zw.values, rows.train));
  rec.variance_explained_test =
      r2_per_column(take_rows(fitted, rows.test), take_rows(zw.values, rows.test));
  return out;
}

FeatureMatrix concat_features(std::span<const FeatureMatrix> parts, const std::string& name) {
  if (parts.empty()) throw ConfigError("joint removal needs at least one feature");
  Index dim = 0;
  for (const auto& p : parts) {
    if (p.n_rows() != parts[0].n_rows() || p.story_offsets != parts[0].story_offsets) {
      throw ValidationError("cannot concatenate '" + p.name + "' with '" + parts[0].name +
                            "': rows or story offsets differ");
    }
    dim += p.dim();
  }
  FeatureMatrix out;
  out.name = name;
  out.sampling = parts[0].sampling;
  out.story_offsets = parts[0].story_offsets;
  out.values.resize(parts[0].n_rows(), dim);
  Index at = 0;
  for (const auto& p : parts) {
    out.values.middleCols(at, p.dim()) = p.values;
    at += p.dim();
  }
  return out;
}

}  // namespace residalign
