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

#include "residalign/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "residalign/columns.hpp"
#include "residalign/error.hpp"

namespace residalign {

DelaySpec DelaySpec::first_n(int n) {
  DelaySpec d;
  d.delays.clear();
  for (int i = 1; i <= n; ++i) d.delays.push_back(i);
  return d;
}

void DelaySpec::validate() const {
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] < 1) throw ConfigError("FIR delays must be positive");
    if (i > 0 && delays[i] <= delays[i - 1]) {
      throw ConfigError("FIR delays must be strictly ascending");
    }
  }
}

Index TrGrid::total() const {
  Index n = 0;
  for (Index k : story_trs) n += k;
  return n;
}

std::vector<Index> TrGrid::offsets() const {
  std::vector<Index> out;
  Index at = 0;
  for (Index k : story_trs) {
    out.push_back(at);
    at += k;
  }
  if (out.empty()) out.push_back(0);
  return out;
}

std::vector<double> TrGrid::centres(std::size_t story) const {
  std::vector<double> out(static_cast<std::size_t>(story_trs.at(story)));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (static_cast<double>(k) + 0.5) * tr_seconds;
  return out;
}

Index TrGrid::bin(std::size_t story, double t) const {
  if (t < 0) return -1;
  auto k = static_cast<Index>(std::floor(t / tr_seconds));
  return k < story_trs.at(story) ? k : -1;
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

double lanczos_kernel(double t, double cutoff_hz, int lobes) {
  const double x = 2.0 * cutoff_hz * t;
  if (std::abs(x) >= lobes) return 0.0;
  return sinc(x) * sinc(x / lobes);
}

MatrixXd lanczos_downsample(const MatrixXd& values, std::span<const double> source_times,
                            std::span<const double> target_times, int lobes,
                            double cutoff_hz) {
  if (values.rows() == 0 || source_times.empty()) {
    throw ComputeError("lanczos_downsample: empty source");
  }
  if (static_cast<Index>(source_times.size()) != values.rows()) {
    throw ValidationError("lanczos_downsample: " + std::to_string(source_times.size()) +
                          " source times for " + std::to_string(values.rows()) + " rows");
  }
  if (lobes < 1) throw ConfigError("lanczos_downsample: lobes must be >= 1");
  for (std::size_t i = 0; i < source_times.size(); ++i) {
    if (!std::isfinite(source_times[i]) || (i > 0 && source_times[i] < source_times[i - 1])) {
      throw ValidationError("lanczos_downsample: source times must be finite and non-decreasing");
    }
  }
  for (std::size_t i = 0; i < target_times.size(); ++i) {
    if (!std::isfinite(target_times[i]) || (i > 0 && target_times[i] < target_times[i - 1])) {
      throw ValidationError("lanczos_downsample: target times must be finite and non-decreasing");
    }
  }
  if (cutoff_hz <= 0) {
    if (target_times.size() < 2) {
      throw ConfigError("lanczos_downsample: cutoff needs two target times or an explicit value");
    }
    const double spacing = (target_times.back() - target_times.front()) /
                           static_cast<double>(target_times.size() - 1);
    cutoff_hz = 0.5 / spacing;
  }
  const double half_width = lobes / (2.0 * cutoff_hz);

  MatrixXd out = MatrixXd::Zero(static_cast<Index>(target_times.size()), values.cols());
  for (std::size_t k = 0; k < target_times.size(); ++k) {
    const double t = target_times[k];
    auto lo = std::lower_bound(source_times.begin(), source_times.end(), t - half_width);
    auto hi = std::upper_bound(source_times.begin(), source_times.end(), t + half_width);
    double total = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double w = lanczos_kernel(t - *it, cutoff_hz, lobes);
      if (w == 0.0) continue;
      out.row(static_cast<Index>(k)) += w * values.row(it - source_times.begin());
      total += w;
    }
    if (std::abs(total) > 1e-12) {
      out.row(static_cast<Index>(k)) /= total;
    } else {
      out.row(static_cast<Index>(k)).setZero();
    }
  }
  return out;
}

FeatureMatrix align_to_tr(const FeatureMatrix& src, const TrGrid& grid, int lobes) {
  const auto ranges = story_ranges(src.story_offsets, src.n_rows());
  if (ranges.size() != grid.story_trs.size()) {
    throw ValidationError("align_to_tr: '" + src.name + "' has " + std::to_string(ranges.size()) +
                          " stories, TR grid has " + std::to_string(grid.story_trs.size()));
  }
  FeatureMatrix out;
  out.name = src.name;
  out.sampling = Sampling::per_tr(grid.tr_seconds);
  out.story_offsets = grid.offsets();
  if (src.sampling.kind == SamplingKind::per_tr) {
    if (src.n_rows() != grid.total()) {
      throw ValidationError("align_to_tr: per-TR '" + src.name + "' has " +
                            std::to_string(src.n_rows()) + " rows, grid has " +
                            std::to_string(grid.total()));
    }
    out.values = src.values;
    return out;
  }
  out.values = MatrixXd::Zero(grid.total(), src.dim());
  const double cutoff = 0.5 / grid.tr_seconds;
  const auto offsets = grid.offsets();
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    auto [b, e] = ranges[s];
    std::vector<double> times(static_cast<std::size_t>(e - b));
    for (Index i = b; i < e; ++i) {
      times[i - b] = src.sampling.kind == SamplingKind::irregular
                         ? src.sampling.onsets[i]
                         : static_cast<double>(i - b) / src.sampling.hz;
    }
    const auto target = grid.centres(s);
    if (target.empty()) continue;
    if (times.empty()) continue;  // story with no events stays zero
    out.values.middleRows(offsets[s], grid.story_trs[s]) =
        lanczos_downsample(src.values.middleRows(b, e - b), times, target, lobes, cutoff);
  }
  return out;
}

MatrixXd fir_expand(const MatrixXd& X, const DelaySpec& spec,
                    std::span<const Index> story_offsets) {
  spec.validate();
  const Index n = X.rows();
  const Index d = X.cols();
  const auto k = static_cast<Index>(spec.delays.size());
  MatrixXd out = MatrixXd::Zero(n, d * k);
  for (auto [b, e] : story_ranges(story_offsets, n)) {
    for (Index t = b; t < e; ++t) {
      for (Index j = 0; j < k; ++j) {
        const Index src = t - spec.delays[j];
        if (src >= b) out.block(t, j * d, 1, d) = X.row(src);
      }
    }
  }
  return out;
}

Standardized zscore_split(const MatrixXd& X, std::span<const Split> split) {
  if (static_cast<Index>(split.size()) != X.rows()) {
    throw ValidationError("zscore_split: split has " + std::to_string(split.size()) +
                          " entries for " + std::to_string(X.rows()) + " rows");
  }
  const auto rows = split_rows(split);
  if (rows.train.empty() || rows.test.empty()) {
    throw ComputeError("zscore_split: train and test splits must both be non-empty");
  }
  Standardized out;
  out.values.resize(X.rows(), X.cols());
  auto apply = [&](const std::vector<Index>& idx, VectorXd& mean, VectorXd& std,
                   std::vector<bool>& degenerate) {
    const MatrixXd part = take_rows(X, idx);
    mean = columns::mean(part);
    std = columns::population_std(part, mean);
    degenerate.assign(static_cast<std::size_t>(X.cols()), false);
    for (Index c = 0; c < X.cols(); ++c) {
      degenerate[c] = columns::is_degenerate(mean(c), std(c));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        out.values(idx[i], c) =
            degenerate[c] ? 0.0 : (part(static_cast<Index>(i), c) - mean(c)) / std(c);
      }
    }
  };
  apply(rows.train, out.stats.train_mean, out.stats.train_std, out.stats.train_degenerate);
  apply(rows.test, out.stats.test_mean, out.stats.test_std, out.stats.test_degenerate);
  return out;
}

}  // namespace residalign
