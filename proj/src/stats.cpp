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

#include "residalign/stats.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "residalign/columns.hpp"
#include "residalign/error.hpp"
#include "residalign/rng.hpp"

namespace residalign {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

NormalizeMode normalize_mode_from_string(std::string_view s) {
  if (s == "per_voxel") return NormalizeMode::per_voxel;
  if (s == "ratio_of_means") return NormalizeMode::ratio_of_means;
  throw ConfigError("unknown normalize mode '" + std::string(s) +
                    "' (expected per_voxel or ratio_of_means)");
}

std::string_view to_string(NormalizeMode m) {
  return m == NormalizeMode::per_voxel ? "per_voxel" : "ratio_of_means";
}

PermutationMode permutation_mode_from_string(std::string_view s) {
  if (s == "aggregate") return PermutationMode::aggregate;
  if (s == "per_voxel") return PermutationMode::per_voxel;
  throw ConfigError("unknown permutation mode '" + std::string(s) +
                    "' (expected aggregate or per_voxel)");
}

Alternative alternative_from_string(std::string_view s) {
  if (s == "two_sided") return Alternative::two_sided;
  if (s == "greater") return Alternative::greater;
  if (s == "less") return Alternative::less;
  throw ConfigError("unknown alternative '" + std::string(s) +
                    "' (expected two_sided, greater or less)");
}

// --- normalized alignment --------------------------------------------------

std::vector<RoiValue> roi_aggregate(const VectorXd& values, const std::vector<bool>& mask,
                                    const RoiAtlas& atlas, std::span<const std::string> groups) {
  if (atlas.n_voxels() != values.size()) {
    throw ValidationError("roi: atlas labels " + std::to_string(atlas.n_voxels()) +
                          " voxels, values have " + std::to_string(values.size()));
  }
  if (!mask.empty() && static_cast<Index>(mask.size()) != values.size()) {
    throw ValidationError("roi: mask length does not match values");
  }
  std::vector<RoiValue> out;
  for (const auto& g : groups) {
    RoiValue rv;
    rv.group = g;
    double sum = 0.0;
    for (Index v : atlas.members(g)) {
      if (!mask.empty() && !mask[v]) continue;
      sum += values(v);
      ++rv.count;
    }
    rv.empty = rv.count == 0;
    rv.mean = rv.empty ? kNaN : sum / static_cast<double>(rv.count);
    out.push_back(rv);
  }
  return out;
}

AlignmentReport normalize_alignment(const VectorXd& r, const VectorXd& ceiling, double threshold,
                                    const RoiAtlas* atlas, std::span<const std::string> groups,
                                    NormalizeMode mode) {
  if (r.size() != ceiling.size()) {
    throw ValidationError("normalize: " + std::to_string(r.size()) + " alignment values vs " +
                          std::to_string(ceiling.size()) + " ceiling values");
  }
  AlignmentReport rep;
  rep.r = r;
  rep.ceiling = ceiling;
  rep.threshold = threshold;
  rep.mask.assign(static_cast<std::size_t>(r.size()), false);
  rep.normalized = VectorXd::Constant(r.size(), kNaN);
  Index n = 0;
  double sum_ratio = 0, sum_r = 0, sum_c = 0;
  for (Index v = 0; v < r.size(); ++v) {
    if (ceiling(v) >= threshold && ceiling(v) > 0 && std::isfinite(r(v))) {
      rep.mask[v] = true;
      rep.normalized(v) = r(v) / ceiling(v);
      sum_ratio += rep.normalized(v);
      sum_r += r(v);
      sum_c += ceiling(v);
      ++n;
    }
  }
  if (n == 0) {
    throw ComputeError("normalize: no voxel has ceiling >= " + std::to_string(threshold));
  }
  rep.subject_mean = mode == NormalizeMode::per_voxel ? sum_ratio / static_cast<double>(n)
                                                      : sum_r / sum_c;
  if (atlas != nullptr) {
    if (mode == NormalizeMode::per_voxel) {
      rep.roi = roi_aggregate(rep.normalized, rep.mask, *atlas, groups);
    } else {
      rep.roi = roi_aggregate(r, rep.mask, *atlas, groups);
      const auto c = roi_aggregate(ceiling, rep.mask, *atlas, groups);
      for (std::size_t i = 0; i < rep.roi.size(); ++i) {
        if (!rep.roi[i].empty) rep.roi[i].mean /= c[i].mean;
      }
    }
  }
  return rep;
}

// --- block permutation -----------------------------------------------------

std::vector<Index> permute_blocks(Index n_rows, std::span<const Index> story_offsets,
                                  Index block_len, std::uint64_t seed) {
  if (block_len < 1) throw ConfigError("block_len must be >= 1");
  Rng rng(seed);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n_rows));
  for (auto [b, e] : story_ranges(story_offsets, n_rows)) {
    std::vector<Index> starts;
    for (Index s = b; s < e; s += block_len) starts.push_back(s);
    std::shuffle(starts.begin(), starts.end(), rng);
    for (Index s : starts) {
      for (Index i = s; i < std::min(s + block_len, e); ++i) out.push_back(i);
    }
  }
  return out;
}

namespace {

MatrixXd standardize_columns(const MatrixXd& m) {
  const VectorXd mu = columns::mean(m);
  const VectorXd sd = columns::population_std(m, mu);
  MatrixXd out(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    if (columns::is_degenerate(mu(c), sd(c))) {
      out.col(c).setZero();
    } else {
      out.col(c) = (m.col(c).array() - mu(c)) / sd(c);
    }
  }
  return out;
}

}  // namespace

PermutationResult block_permutation_test(const MatrixXd& pred, const MatrixXd& actual,
                                         std::span<const Index> story_offsets,
                                         const std::vector<bool>& mask,
                                         const PermutationParams& params) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols()) {
    throw ValidationError("permutation: prediction and response shapes differ");
  }
  const Index M = pred.rows();
  if (M < 2 * params.block_len) {
    throw ValidationError("permutation: " + std::to_string(M) + " rows is fewer than two blocks of " +
                          std::to_string(params.block_len));
  }
  if (params.n_permutations < 1) throw ConfigError("permutation: n_permutations must be >= 1");
  std::vector<Index> cols;
  for (Index v = 0; v < pred.cols(); ++v) {
    if (mask.empty() || mask.at(static_cast<std::size_t>(v))) cols.push_back(v);
  }
  if (cols.empty()) throw ComputeError("permutation: empty voxel mask");

  const MatrixXd zp = standardize_columns(pred(Eigen::all, cols));
  const MatrixXd za = standardize_columns(actual(Eigen::all, cols));
  const auto n_cols = static_cast<double>(cols.size());
  const auto m = static_cast<double>(M);

  PermutationResult out;
  const VectorXd obs = zp.cwiseProduct(za).colwise().sum().transpose() / m;
  out.observed = obs.sum() / n_cols;
  // Ties count against the observed value; the slack absorbs summation order.
  const double slack = 1e-12;
  Index exceed = 0;
  VectorXd exceed_voxel = VectorXd::Zero(obs.size());
  const SeedTree seeds(params.seed);
  for (int i = 0; i < params.n_permutations; ++i) {
    const auto perm = permute_blocks(M, story_offsets, params.block_len,
                                     seeds.derive("perm/" + std::to_string(i)));
    const VectorXd null = zp(perm, Eigen::all).cwiseProduct(za).colwise().sum().transpose() / m;
    if (null.sum() / n_cols >= out.observed - slack) ++exceed;
    if (params.mode == PermutationMode::per_voxel) {
      exceed_voxel.array() += (null.array() >= obs.array() - slack).cast<double>();
    }
  }
  const double denom = 1.0 + params.n_permutations;
  out.p = (1.0 + static_cast<double>(exceed)) / denom;
  if (params.mode == PermutationMode::per_voxel) {
    out.voxel_observed = VectorXd::Constant(pred.cols(), kNaN);
    out.voxel_p = VectorXd::Constant(pred.cols(), kNaN);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out.voxel_observed(cols[k]) = obs(static_cast<Index>(k));
      out.voxel_p(cols[k]) = (1.0 + exceed_voxel(static_cast<Index>(k))) / denom;
    }
  }
  return out;
}

// --- Wilcoxon --------------------------------------------------------------

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences, Alternative alt) {
  std::vector<double> d;
  for (double x : differences) {
    if (!std::isfinite(x)) throw ValidationError("wilcoxon: non-finite difference");
    if (x != 0.0) d.push_back(x);
  }
  WilcoxonResult res;
  res.n = static_cast<Index>(d.size());
  if (d.empty()) {
    res.all_zero = true;
    res.p = 1.0;
    return res;
  }
  // Doubled midranks are integers, which keeps the exact DP on integers.
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<long> rank2(d.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const auto doubled = static_cast<long>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) w2 += rank2[i];
  }
  res.w_plus = static_cast<double>(w2) / 2.0;
  const double n = static_cast<double>(res.n);

  if (res.n <= kWilcoxonExactMax) {
    res.exact = true;
    long total = 0;
    for (long r : rank2) total += r;
    std::vector<double> count(static_cast<std::size_t>(total + 1), 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      for (long w = reach; w >= 0; --w) {
        if (count[w] != 0.0) count[w + r] += count[w];
      }
      reach += r;
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(res.n));
    double le = 0, ge = 0;
    for (long w = 0; w <= total; ++w) {
      if (w <= w2) le += count[w];
      if (w >= w2) ge += count[w];
    }
    le /= patterns;
    ge /= patterns;
    switch (alt) {
      case Alternative::two_sided: res.p = std::min(1.0, 2.0 * std::min(le, ge)); break;
      case Alternative::greater: res.p = ge; break;
      case Alternative::less: res.p = le; break;
    }
    return res;
  }

  res.exact = false;
  const double mean = n * (n + 1) / 4.0;
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  if (!(var > 0)) {
    res.p = 1.0;
    return res;
  }
  const double sd = std::sqrt(var);
  const double dev = res.w_plus - mean;
  switch (alt) {
    case Alternative::two_sided: {
      const double z = std::max(0.0, std::abs(dev) - 0.5) / sd;
      res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
      break;
    }
    case Alternative::greater:
      res.p = 0.5 * std::erfc(((dev - 0.5) / sd) / std::sqrt(2.0));
      break;
    case Alternative::less:
      res.p = 0.5 * std::erfc(-((dev + 0.5) / sd) / std::sqrt(2.0));
      break;
  }
  return res;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    Alternative alt) {
  if (a.size() != b.size()) {
    throw ValidationError("wilcoxon: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + " paired values");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return wilcoxon_signed_rank(d, alt);
}

// --- feature correlation ---------------------------------------------------

CorrelationMatrix feature_correlation(std::span<const FeatureMatrix> features) {
  CorrelationMatrix out;
  if (features.empty()) return out;
  const Index n = features[0].n_rows();
  MatrixXd stacked(n, static_cast<Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (f.dim() != 1) {
      throw ValidationError("feature_correlation: '" + f.name + "' has dim " +
                            std::to_string(f.dim()) + " (reduce it to one column first)");
    }
    if (f.n_rows() != n) {
      throw ValidationError("feature_correlation: '" + f.name + "' has " +
                            std::to_string(f.n_rows()) + " rows, expected " + std::to_string(n));
    }
    out.names.push_back(f.name);
    stacked.col(static_cast<Index>(i)) = f.values.col(0);
  }
  const MatrixXd z = standardize_columns(stacked);
  const auto k = stacked.cols();
  out.degenerate.resize(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) out.degenerate[c] = z.col(c).isZero(0.0);
  out.r = (z.transpose() * z) / static_cast<double>(n);
  for (Index c = 0; c < k; ++c) {
    if (!out.degenerate[c]) out.r(c, c) = 1.0;
  }
  return out;
}

FeatureMatrix first_principal_component(const FeatureMatrix& fm) {
  FeatureMatrix out;
  out.name = fm.name;
  out.sampling = fm.sampling;
  out.story_offsets = fm.story_offsets;
  if (fm.dim() == 1) {
    out.values = fm.values;
    return out;
  }
  const MatrixXd centred = fm.values.rowwise() - fm.values.colwise().mean();
  Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeThinV);
  VectorXd axis = svd.matrixV().col(0);
  Index big = 0;
  axis.cwiseAbs().maxCoeff(&big);
  if (axis(big) < 0) axis = -axis;
  out.values = centred * axis;
  return out;
}

}  // namespace residalign
