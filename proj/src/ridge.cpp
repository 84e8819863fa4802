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

#include "residalign/ridge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "residalign/columns.hpp"
#include "residalign/error.hpp"
#include "residalign/io.hpp"
#include "residalign/npy.hpp"
#include "residalign/rng.hpp"
#include "residalign/temporal.hpp"

namespace residalign {

// --- column helpers --------------------------------------------------------

namespace columns {

bool is_degenerate(double mean, double std) {
  return !(std > 1e-12 * (1.0 + std::abs(mean)));
}

VectorXd mean(const MatrixXd& m) {
  if (m.rows() == 0) return VectorXd::Zero(m.cols());
  return m.colwise().mean().transpose();
}

VectorXd population_std(const MatrixXd& m, const VectorXd& mu) {
  VectorXd out(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    double ss = (m.col(c).array() - mu(c)).square().sum();
    out(c) = m.rows() > 0 ? std::sqrt(ss / static_cast<double>(m.rows())) : 0.0;
  }
  return out;
}

double pearson(const VectorXd& a, const VectorXd& b, bool* degenerate) {
  const double ma = a.mean();
  const double mb = b.mean();
  const auto da = (a.array() - ma).eval();
  const auto db = (b.array() - mb).eval();
  const double n = static_cast<double>(a.size());
  const double sa = std::sqrt(da.square().sum() / n);
  const double sb = std::sqrt(db.square().sum() / n);
  const bool degen = is_degenerate(ma, sa) || is_degenerate(mb, sb);
  if (degenerate) *degenerate = degen;
  if (degen) return 0.0;
  double r = (da * db).sum() / (n * sa * sb);
  return std::clamp(r, -1.0, 1.0);
}

VectorXd pearson(const MatrixXd& a, const MatrixXd& b, std::vector<bool>* degenerate) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("pearson: shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()));
  }
  VectorXd r(a.cols());
  if (degenerate) degenerate->assign(static_cast<std::size_t>(a.cols()), false);
  for (Index c = 0; c < a.cols(); ++c) {
    bool d = false;
    r(c) = pearson(VectorXd(a.col(c)), VectorXd(b.col(c)), &d);
    if (degenerate) (*degenerate)[c] = d;
  }
  return r;
}

}  // namespace columns

// --- RidgeModel ------------------------------------------------------------

void RidgeModel::reset_standardization() {
  x_mean = VectorXd::Zero(dim_in());
  x_std = VectorXd::Ones(dim_in());
  y_mean = VectorXd::Zero(dim_out());
  y_std = VectorXd::Ones(dim_out());
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return prefix.parent_path() / (prefix.filename().string() + suffix);
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ComputeError(std::string(what) + " contains non-finite values");
}

}  // namespace

void RidgeModel::save(const std::filesystem::path& prefix) const {
  npy::write(with_suffix(prefix, ".weights.npy"), weights);
  npy::write_vector(with_suffix(prefix, ".lambdas.npy"), to_std(lambda_per_target));
  npy::write_vector(with_suffix(prefix, ".x_mean.npy"), to_std(x_mean));
  npy::write_vector(with_suffix(prefix, ".x_std.npy"), to_std(x_std));
  npy::write_vector(with_suffix(prefix, ".y_mean.npy"), to_std(y_mean));
  npy::write_vector(with_suffix(prefix, ".y_std.npy"), to_std(y_std));
  nlohmann::json meta{{"kind", "ridge_model"},
                      {"dim_in", dim_in()},
                      {"dim_out", dim_out()},
                      {"arrays", {"weights", "lambdas", "x_mean", "x_std", "y_mean", "y_std"}}};
  io::write_file_atomic(with_suffix(prefix, ".meta.json"), meta.dump(2) + "\n");
}

RidgeModel RidgeModel::load(const std::filesystem::path& prefix) {
  RidgeModel m;
  m.weights = npy::read(with_suffix(prefix, ".weights.npy"));
  m.lambda_per_target = from_std(npy::read_vector(with_suffix(prefix, ".lambdas.npy")));
  m.x_mean = from_std(npy::read_vector(with_suffix(prefix, ".x_mean.npy")));
  m.x_std = from_std(npy::read_vector(with_suffix(prefix, ".x_std.npy")));
  m.y_mean = from_std(npy::read_vector(with_suffix(prefix, ".y_mean.npy")));
  m.y_std = from_std(npy::read_vector(with_suffix(prefix, ".y_std.npy")));
  if (m.lambda_per_target.size() != m.dim_out() || m.x_mean.size() != m.dim_in() ||
      m.x_std.size() != m.dim_in() || m.y_mean.size() != m.dim_out() ||
      m.y_std.size() != m.dim_out()) {
    throw FormatError("ridge model '" + prefix.string() + "': inconsistent array shapes");
  }
  return m;
}

// --- solver ----------------------------------------------------------------

RidgeSolver::RidgeSolver(const MatrixXd& X) {
  Eigen::BDCSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  U_ = svd.matrixU();
  singular_values_ = svd.singularValues();
  V_ = svd.matrixV();
}

MatrixXd RidgeSolver::project(const MatrixXd& Y) const { return U_.transpose() * Y; }

MatrixXd RidgeSolver::weights(const MatrixXd& Y, double lambda) const {
  VectorXd shrink = singular_values_.array() / (singular_values_.array().square() + lambda);
  return V_ * (shrink.asDiagonal() * project(Y));
}

MatrixXd RidgeSolver::weights(const MatrixXd& Y, const VectorXd& lambdas) const {
  MatrixXd UtY = project(Y);
  const auto& s = singular_values_;
  for (Index j = 0; j < UtY.cols(); ++j) {
    UtY.col(j).array() *= s.array() / (s.array().square() + lambdas(j));
  }
  return V_ * UtY;
}

MatrixXd RidgeSolver::rotate(const MatrixXd& X_other) const { return X_other * V_; }

MatrixXd RidgeSolver::predict_other(const MatrixXd& XV, const MatrixXd& UtY,
                                    double lambda) const {
  VectorXd shrink = singular_values_.array() / (singular_values_.array().square() + lambda);
  return XV * (shrink.asDiagonal() * UtY);
}

RidgeModel ridge_fit(const MatrixXd& X, const MatrixXd& Y, double lambda) {
  if (X.rows() < 1) throw ComputeError("ridge_fit: need at least one row");
  if (X.rows() != Y.rows()) {
    throw ComputeError("ridge_fit: X has " + std::to_string(X.rows()) + " rows, Y has " +
                       std::to_string(Y.rows()));
  }
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw ComputeError("ridge_fit: lambda must be positive and finite");
  }
  check_finite(X, "ridge_fit: X");
  check_finite(Y, "ridge_fit: Y");
  RidgeModel m;
  m.weights = RidgeSolver(X).weights(Y, lambda);
  m.lambda_per_target = VectorXd::Constant(Y.cols(), lambda);
  m.reset_standardization();
  return m;
}

MatrixXd predict(const RidgeModel& model, const MatrixXd& X) {
  if (X.cols() != model.dim_in()) {
    throw ValidationError("predict: input has " + std::to_string(X.cols()) +
                          " columns, model expects " + std::to_string(model.dim_in()));
  }
  MatrixXd Xs(X.rows(), X.cols());
  for (Index c = 0; c < X.cols(); ++c) {
    if (model.x_std(c) == 0.0) {
      Xs.col(c).setZero();
    } else {
      Xs.col(c) = (X.col(c).array() - model.x_mean(c)) / model.x_std(c);
    }
  }
  MatrixXd out = Xs * model.weights;
  for (Index c = 0; c < out.cols(); ++c) {
    out.col(c) = out.col(c).array() * model.y_std(c) + model.y_mean(c);
  }
  return out;
}

// --- bootstrap -------------------------------------------------------------

std::vector<std::pair<Index, Index>> make_chunks(Index n_rows,
                                                 std::span<const Index> story_offsets,
                                                 Index chunk_len) {
  if (chunk_len < 1) throw ConfigError("bootstrap chunk_len must be >= 1");
  std::vector<std::pair<Index, Index>> chunks;
  for (auto [b, e] : story_ranges(story_offsets, n_rows)) {
    for (Index s = b; s < e; s += chunk_len) chunks.emplace_back(s, std::min(s + chunk_len, e));
  }
  return chunks;
}

Index held_out_chunk_count(Index n_rows, Index n_chunks, const BootstrapParams& params) {
  if (n_chunks < 2) {
    throw ComputeError("bootstrap: need at least 2 chunks, have " + std::to_string(n_chunks));
  }
  auto n = static_cast<Index>(std::llround(params.holdout_frac * static_cast<double>(n_rows) /
                                           static_cast<double>(params.chunk_len)));
  return std::clamp<Index>(n, 1, n_chunks - 1);
}

std::vector<Index> draw_holdout(const std::vector<std::pair<Index, Index>>& chunks,
                                Index n_held, std::uint64_t seed) {
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> rows;
  for (Index k = 0; k < n_held; ++k) {
    auto [b, e] = chunks[order[k]];
    for (Index i = b; i < e; ++i) rows.push_back(i);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

BootstrapFit bootstrap_ridge(const MatrixXd& X, const MatrixXd& Y,
                             std::span<const double> grid,
                             const BootstrapParams& params, std::uint64_t seed,
                             std::span<const Index> story_offsets, LambdaScore score) {
  const Index n = X.rows();
  if (Y.rows() != n) {
    throw ComputeError("bootstrap_ridge: X has " + std::to_string(n) + " rows, Y has " +
                       std::to_string(Y.rows()));
  }
  if (grid.empty()) throw ConfigError("bootstrap_ridge: empty lambda grid");
  for (double l : grid) {
    if (!(l > 0) || !std::isfinite(l)) throw ConfigError("bootstrap_ridge: lambdas must be positive");
  }
  check_finite(X, "bootstrap_ridge: X");
  check_finite(Y, "bootstrap_ridge: Y");

  const auto G = static_cast<Index>(grid.size());
  BootstrapFit fit;
  fit.mean_score = MatrixXd::Zero(G, Y.cols());
  fit.selected.assign(static_cast<std::size_t>(Y.cols()), 0);

  // A single-lambda grid has nothing to select.
  if (G > 1) {
    if (n <= params.chunk_len) {
      throw ComputeError("bootstrap_ridge: need more rows (" + std::to_string(n) +
                         ") than chunk_len (" + std::to_string(params.chunk_len) + ")");
    }
    if (params.n_boots < 1) throw ConfigError("bootstrap_ridge: n_boots must be >= 1");
    const auto chunks = make_chunks(n, story_offsets, params.chunk_len);
    const Index n_held = held_out_chunk_count(n, static_cast<Index>(chunks.size()), params);
    const SeedTree seeds(seed);
    for (int b = 0; b < params.n_boots; ++b) {
      auto held = draw_holdout(chunks, n_held, seeds.derive("boot/" + std::to_string(b)));
      std::vector<Index> train;
      train.reserve(static_cast<std::size_t>(n));
      for (Index i = 0, h = 0; i < n; ++i) {
        if (h < static_cast<Index>(held.size()) && held[h] == i) {
          ++h;
        } else {
          train.push_back(i);
        }
      }
      if (2 * static_cast<Index>(train.size()) < X.cols()) {
        throw ComputeError("bootstrap_ridge: holdout leaves " + std::to_string(train.size()) +
                           " training rows for " + std::to_string(X.cols()) +
                           " features (need at least D/2)");
      }
      const MatrixXd Xtr = take_rows(X, train);
      const MatrixXd Ytr = take_rows(Y, train);
      const MatrixXd Xv = take_rows(X, held);
      const MatrixXd Yv = take_rows(Y, held);
      RidgeSolver solver(Xtr);
      const MatrixXd UtY = solver.project(Ytr);
      const MatrixXd XV = solver.rotate(Xv);
      for (Index g = 0; g < G; ++g) {
        MatrixXd pred = solver.predict_other(XV, UtY, grid[g]);
        if (score == LambdaScore::pearson) {
          fit.mean_score.row(g) += columns::pearson(pred, Yv).transpose();
        } else {
          fit.mean_score.row(g) -= (pred - Yv).colwise().squaredNorm() /
                                   static_cast<double>(Yv.rows());
        }
      }
    }
    fit.mean_score /= static_cast<double>(params.n_boots);
    for (Index v = 0; v < Y.cols(); ++v) {
      Index best = 0;
      for (Index g = 1; g < G; ++g) {
        if (fit.mean_score(g, v) > fit.mean_score(best, v)) best = g;
      }
      fit.selected[v] = static_cast<std::size_t>(best);
    }
  }

  VectorXd lambdas(Y.cols());
  for (Index v = 0; v < Y.cols(); ++v) lambdas(v) = grid[fit.selected[v]];
  fit.model.weights = RidgeSolver(X).weights(Y, lambdas);
  fit.model.lambda_per_target = lambdas;
  fit.model.reset_standardization();
  return fit;
}

// --- probing ---------------------------------------------------------------

VectorXd r2_per_column(const MatrixXd& pred, const MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ValidationError("r2: shape mismatch");
  }
  VectorXd out(target.cols());
  for (Index c = 0; c < target.cols(); ++c) {
    const double mu = target.col(c).mean();
    const double sst = (target.col(c).array() - mu).square().sum();
    const double sse = (target.col(c) - pred.col(c)).squaredNorm();
    const double std = std::sqrt(sst / static_cast<double>(target.rows()));
    out(c) = columns::is_degenerate(mu, std) ? std::numeric_limits<double>::quiet_NaN()
                                             : 1.0 - sse / sst;
  }
  return out;
}

ProbeResult probe_r2(const FeatureMatrix& W, const FeatureMatrix& L,
                     std::span<const double> grid, std::span<const Split> split,
                     const BootstrapParams& params, std::uint64_t seed) {
  if (W.n_rows() != L.n_rows()) {
    throw ValidationError("probe: representation has " + std::to_string(W.n_rows()) +
                          " rows, feature has " + std::to_string(L.n_rows()));
  }
  if (static_cast<Index>(split.size()) != W.n_rows()) {
    throw ValidationError("probe: split length does not match rows");
  }
  const auto zw = zscore_split(W.values, split);
  const auto zl = zscore_split(L.values, split);
  const auto rows = split_rows(split);
  const auto train_offsets = subset_story_offsets(W.story_offsets, W.n_rows(), rows.train);
  auto fit = bootstrap_ridge(take_rows(zw.values, rows.train), take_rows(zl.values, rows.train),
                             grid, params, seed, train_offsets);
  // Held-out rows go through the train statistics so the fitted map applies
  // to them unchanged.
  auto train_scaled = [&](const MatrixXd& X, const ZStats& st) {
    MatrixXd out = take_rows(X, rows.test);
    for (Index c = 0; c < out.cols(); ++c) {
      if (st.train_degenerate[c]) {
        out.col(c).setZero();
      } else {
        out.col(c) = (out.col(c).array() - st.train_mean(c)) / st.train_std(c);
      }
    }
    return out;
  };
  const MatrixXd pred = predict(fit.model, train_scaled(W.values, zw.stats));
  ProbeResult out;
  out.r2 = r2_per_column(pred, train_scaled(L.values, zl.stats));
  out.undefined.resize(static_cast<std::size_t>(out.r2.size()));
  for (Index c = 0; c < out.r2.size(); ++c) {
    out.undefined[c] = std::isnan(out.r2(c)) || zl.stats.test_degenerate[c];
    if (out.undefined[c]) out.r2(c) = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
  return out;
}

std::vector<double> default_lambda_grid() { return log_grid(10.0, 1000.0, 10); }

}  // namespace residalign
