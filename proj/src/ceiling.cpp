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

#include "residalign/ceiling.hpp"

#include <Eigen/SVD>

#include <numeric>

#include "residalign/encoding.hpp"
#include "residalign/error.hpp"
#include "residalign/parallel.hpp"
#include "residalign/rng.hpp"

namespace residalign {

CeilingPredictor ceiling_predictor_from_string(std::string_view s) {
  if (s == "all_voxels") return CeilingPredictor::all_voxels;
  if (s == "matched_voxel") return CeilingPredictor::matched_voxel;
  throw ConfigError("unknown ceiling predictor '" + std::string(s) +
                    "' (expected all_voxels or matched_voxel)");
}

std::string_view to_string(CeilingPredictor p) {
  return p == CeilingPredictor::all_voxels ? "all_voxels" : "matched_voxel";
}

std::vector<std::vector<std::size_t>> combinations(const std::vector<std::size_t>& pool,
                                                   std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > pool.size()) return out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<std::size_t> combo;
    for (auto i : idx) combo.push_back(pool[i]);
    out.push_back(std::move(combo));
    // Advance the rightmost index that still has room.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

MatrixXd pca_reduce(const MatrixXd& X, std::span<const Index> train_rows, Index k) {
  if (k <= 0 || k >= X.cols()) return X;
  const MatrixXd train = take_rows(X, train_rows);
  const Eigen::RowVectorXd mu = train.colwise().mean();
  Eigen::BDCSVD<MatrixXd> svd(train.rowwise() - mu, Eigen::ComputeThinV);
  const Index keep = std::min<Index>(k, svd.matrixV().cols());
  return (X.rowwise() - mu) * svd.matrixV().leftCols(keep);
}

namespace {

void check_aligned(std::span<const ResponseMatrix> rs) {
  if (rs.size() < 2) throw ValidationError("ceiling: need at least 2 subjects");
  const auto& a = rs[0];
  for (const auto& b : rs) {
    b.validate();
    if (b.n_trs() != a.n_trs() || b.n_voxels() != a.n_voxels()) {
      throw ValidationError("ceiling: subject '" + b.subject_id + "' is " +
                            std::to_string(b.n_trs()) + "x" + std::to_string(b.n_voxels()) +
                            ", '" + a.subject_id + "' is " + std::to_string(a.n_trs()) + "x" +
                            std::to_string(a.n_voxels()));
    }
    if (b.split != a.split || b.story_offsets != a.story_offsets) {
      throw ValidationError("ceiling: subject '" + b.subject_id +
                            "' has a different split or story layout");
    }
    if (b.modality != a.modality) {
      throw ValidationError("ceiling: subjects mix reading and listening");
    }
  }
}

struct Job {
  std::size_t target;
  int size;
  std::vector<std::size_t> others;
};

}  // namespace

std::vector<CeilingMap> cross_subject_ceiling(std::span<const ResponseMatrix> responses,
                                              const CeilingParams& params) {
  check_aligned(responses);
  const auto n = static_cast<int>(responses.size());
  const int lo = params.min_subset_size;
  const int hi = params.max_subset_size > 0 ? std::min(params.max_subset_size, n) : n;
  if (lo < 2 || lo > hi) {
    throw ConfigError("ceiling: subset sizes must satisfy 2 <= min <= max <= n_subjects");
  }
  const auto rows = split_rows(responses[0].split);

  std::vector<MatrixXd> z;
  for (const auto& r : responses) z.push_back(zscore_split(r.values, r.split).values);

  std::vector<Job> jobs;
  for (std::size_t t = 0; t < responses.size(); ++t) {
    std::vector<std::size_t> pool;
    for (std::size_t o = 0; o < responses.size(); ++o) {
      if (o != t) pool.push_back(o);
    }
    for (int s = lo; s <= hi; ++s) {
      for (auto& c : combinations(pool, static_cast<std::size_t>(s - 1))) {
        jobs.push_back({t, s, std::move(c)});
      }
    }
  }

  const SeedTree seeds(params.seed);
  const Index V = responses[0].n_voxels();
  std::vector<VectorXd> r(jobs.size());
  // One job per (target, subset); all voxels of a target share the fit.
  parallel_for(jobs.size(), params.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const ResponseMatrix& target = responses[job.target];
    EncodingParams ep;
    ep.lambda_grid = params.lambda_grid;
    ep.bootstrap = params.bootstrap;
    ep.score = params.score;
    ep.fir = false;
    // Same draws for every subset of a target, so relabeling others is a no-op.
    ep.seed = seeds.derive("ceiling/" + target.subject_id);
    if (params.predictor == CeilingPredictor::all_voxels) {
      MatrixXd X(target.n_trs(), V * static_cast<Index>(job.others.size()));
      for (std::size_t k = 0; k < job.others.size(); ++k) {
        X.middleCols(static_cast<Index>(k) * V, V) = z[job.others[k]];
      }
      X = pca_reduce(X, rows.train, params.pca_components);
      r[j] = fit_encoding(X, target, ep).r;
    } else {
      r[j].resize(V);
      ResponseMatrix one = target;
      MatrixXd X(target.n_trs(), static_cast<Index>(job.others.size()));
      for (Index v = 0; v < V; ++v) {
        one.values = target.values.col(v);
        for (std::size_t k = 0; k < job.others.size(); ++k) {
          X.col(static_cast<Index>(k)) = z[job.others[k]].col(v);
        }
        r[j](v) = fit_encoding(X, one, ep).r(0);
      }
    }
  });

  std::vector<CeilingMap> out(responses.size());
  for (std::size_t t = 0; t < responses.size(); ++t) {
    out[t].subject_id = responses[t].subject_id;
    out[t].modality = responses[t].modality;
    out[t].ceiling = VectorXd::Zero(V);
    out[t].scheme = "predictor=" + std::string(to_string(params.predictor)) +
                    ";pca=" + std::to_string(params.pca_components) +
                    ";sizes=" + std::to_string(lo) + ".." + std::to_string(hi) +
                    ";pool=mean;floor=0";
  }
  std::vector<int> count(responses.size(), 0);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& m = out[jobs[j].target];
    auto [it, fresh] = m.by_size.try_emplace(jobs[j].size, VectorXd::Zero(V));
    it->second += r[j];
    ++m.subsets_per_size[jobs[j].size];
    m.ceiling += r[j];
    ++count[jobs[j].target];
  }
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (auto& [s, v] : out[t].by_size) v /= static_cast<double>(out[t].subsets_per_size[s]);
    out[t].ceiling = (out[t].ceiling / static_cast<double>(count[t])).cwiseMax(0.0);
  }
  return out;
}

}  // namespace residalign
