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

#include "helpers.hpp"

#include "residalign/encoding.hpp"
#include "residalign/error.hpp"
#include "residalign/residual.hpp"
#include "residalign/temporal.hpp"

using namespace residalign;
using testing::max_abs;
using testing::per_tr;
using testing::randn;

namespace {

RemovalParams near_ols() {
  RemovalParams p;
  p.lambda_grid = {1e-10};
  return p;
}

// Split-standardized copy, so a linear map on it survives removal exactly.
MatrixXd standardized(const MatrixXd& X, const std::vector<Split>& split) {
  return zscore_split(X, split).values;
}

// Split the rows into whole-story train/test parts.
ResponseMatrix responses(MatrixXd values, std::vector<Index> offsets, Index test_from) {
  ResponseMatrix rm;
  rm.subject_id = "sub-01";
  rm.story_offsets = std::move(offsets);
  rm.split = testing::head_train(values.rows(), test_from);
  rm.values = std::move(values);
  return rm;
}

}  // namespace

TEST_SUITE("residual") {
  TEST_CASE("perfect removal") {
    const auto split = testing::head_train(80, 60);
    // One feature column: every row, both splits.
    // The residual keeps W's split means, so only those remain.
    const MatrixXd l = randn(80, 1, 1);
    const MatrixXd w = l * randn(1, 5, 2);
    const auto one = remove_feature(per_tr("L", l), per_tr("W", w), split, near_ols());
    MatrixXd means(80, 5);
    means.topRows(60).rowwise() = w.topRows(60).colwise().mean();
    means.bottomRows(20).rowwise() = w.bottomRows(20).colwise().mean();
    CHECK(max_abs(one.residual.values - means) < 1e-6);
    CHECK(one.residual.name == "W-minus-L");
    // Several columns: exact on train rows. Test rows are rescaled by their
    // own statistics, which a multi-column map does not preserve.
    const MatrixXd L = standardized(randn(80, 3, 3), split);
    const auto res = remove_feature(per_tr("L", L), per_tr("W", L * randn(3, 5, 4)), split, near_ols());
    CHECK(max_abs(res.residual.values.topRows(60)) < 1e-6);
    CHECK(res.record.variance_explained_train.minCoeff() > 1 - 1e-9);
  }

  TEST_CASE("uncorrelated feature leaves a standardized representation unchanged") {
    const auto split = testing::head_train(60, 45);
    const MatrixXd W = standardized(randn(60, 4, 3), split);
    MatrixXd L = randn(60, 2, 4);
    // project the centred train rows of L off the train columns of W
    const MatrixXd Wt = W.topRows(45);
    MatrixXd Lt = L.topRows(45).rowwise() - L.topRows(45).colwise().mean();
    Lt -= Wt * (Wt.transpose() * Wt).ldlt().solve(Wt.transpose() * Lt);
    L.topRows(45) = Lt;
    const auto res = remove_feature(per_tr("L", L), per_tr("W", W), split, near_ols());
    CHECK(max_abs(res.residual.values - W) < 1e-8);
  }

  TEST_CASE("component orthogonal to the feature survives on train rows") {
    const auto split = testing::head_train(70, 50);
    const MatrixXd L = standardized(randn(70, 3, 5), split);
    MatrixXd E = randn(70, 4, 6);
    MatrixXd basis(50, 4);
    basis << VectorXd::Ones(50), L.topRows(50);
    E.topRows(50) -= basis * (basis.transpose() * basis).ldlt().solve(basis.transpose() * E.topRows(50));
    const MatrixXd W = L * randn(3, 4, 7) + E;
    const auto res = remove_feature(per_tr("L", L), per_tr("W", W), split, near_ols());
    CHECK(max_abs(res.residual.values.topRows(50) - E.topRows(50)) < 1e-6);
  }

  TEST_CASE("train residuals are orthogonal to the standardized feature and removal is idempotent") {
    std::mt19937_64 rng(42);
    double worst_dot = 0, worst_idem = 0;
    for (int i = 0; i < 50; ++i) {
      const Index n = 20 + static_cast<Index>(rng() % 31);
      const Index n_train = n - 5 - static_cast<Index>(rng() % 5);
      const Index d = 1 + static_cast<Index>(rng() % 4);
      const Index D = 1 + static_cast<Index>(rng() % 8);
      const auto split = testing::head_train(n, n_train);
      const MatrixXd L = randn(n, d, rng());
      const MatrixXd W = L * randn(d, D, rng()) + randn(n, D, rng());
      const auto first = remove_feature(per_tr("L", L), per_tr("W", W), split, near_ols());
      const MatrixXd zL = standardized(L, split).topRows(n_train);
      worst_dot = std::max(worst_dot, max_abs(zL.transpose() * first.residual.values.topRows(n_train)));
      const auto again = remove_feature(per_tr("L", L), first.residual, split, near_ols());
      worst_idem = std::max(worst_idem, max_abs(again.residual.values - first.residual.values));
    }
    CHECK(worst_dot < 1e-8);
    CHECK(worst_idem < 1e-6);
  }

  TEST_CASE("underdetermined or mismatched removal is rejected") {
    const auto split = testing::head_train(12, 4);
    CHECK_THROWS(remove_feature(per_tr("L", randn(12, 4, 1)), per_tr("W", randn(12, 2, 2)), split, near_ols()));
    CHECK_THROWS_AS(remove_feature(per_tr("L", randn(11, 1, 1)), per_tr("W", randn(12, 2, 2)), split, near_ols()),
                    ValidationError);
  }

  TEST_CASE("joint removal concatenates columns") {
    const auto a = per_tr("a", randn(10, 2, 1)), b = per_tr("b", randn(10, 3, 2));
    const std::vector<FeatureMatrix> parts{a, b};
    const auto j = concat_features(parts, "joint");
    CHECK(j.dim() == 5);
    CHECK(j.values.rightCols(3) == b.values);
  }
}

TEST_SUITE("encoding") {
  TEST_CASE("pearson conventions") {
    const MatrixXd a = randn(30, 3, 1);
    MatrixXd b = a;
    b.col(1) *= -1;
    b.col(2).setConstant(4.0);
    const auto p = pearson_per_voxel(b, a);
    CHECK(p.r(0) == doctest::Approx(1.0));
    CHECK(p.r(1) == doctest::Approx(-1.0));
    CHECK(p.r(2) == 0.0);
    CHECK(p.degenerate[2]);
    CHECK_FALSE(p.degenerate[0]);
  }

  TEST_CASE("percent decrease") {
    VectorXd before(3), after(3);
    before << 0.5, 0.5, 0.005;
    after << 0.0, 0.4, 0.001;
    const auto pd = percent_decrease(before, after);
    CHECK(pd.value(0) == doctest::Approx(100));
    CHECK(pd.value(1) == doctest::Approx(20));
    CHECK(pd.undefined[2]);
    CHECK(std::isnan(pd.value(2)));
  }

  TEST_CASE("design width is delays times dims") {
    EncodingParams p;
    const auto split = testing::head_train(40, 30);
    const std::vector<Index> offsets{0};
    CHECK(encoding_design(randn(40, 10, 1), split, offsets, p).cols() == 60);
  }

  TEST_CASE("a delayed linear response is recovered") {
    const Index n = 2000;
    const std::vector<Index> offsets{0, 500, 1000, 1500};
    const MatrixXd X = randn(n, 4, 1);
    const MatrixXd F = fir_expand(X, DelaySpec{}, offsets);
    const MatrixXd signal = F * randn(24, 6, 2);
    // per-voxel SNR 10 in variance
    MatrixXd Y = signal;
    const MatrixXd noise = randn(n, 6, 3);
    for (Index v = 0; v < 6; ++v) {
      Y.col(v) += noise.col(v) * std::sqrt((signal.col(v).array() - signal.col(v).mean()).square().mean() / 10.0);
    }
    EncodingParams p;
    p.lambda_grid = log_grid(0.1, 1000, 9);
    p.bootstrap.chunk_len = 20;
    p.bootstrap.n_boots = 10;
    const auto res = fit_encoding(per_tr("X", X, offsets), responses(Y, offsets, 1500), p);
    CHECK(res.r.mean() > 0.95);
    CHECK(res.test_pred.rows() == 500);
    CHECK(res.test_offsets == std::vector<Index>{0});
  }

  TEST_CASE("noise responses give near-zero correlation") {
    EncodingParams p;
    p.bootstrap.chunk_len = 20;
    p.bootstrap.n_boots = 5;
    double total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const std::vector<Index> offsets{0, 200};
      const auto res = fit_encoding(per_tr("X", randn(300, 3, 10 + s), offsets),
                                    responses(randn(300, 8, 100 + s), offsets, 200), p);
      total += res.r.mean();
    }
    CHECK(std::abs(total / 20) < 0.05);
  }

  TEST_CASE("voxel permutation, reproducibility and split checks") {
    const std::vector<Index> offsets{0, 100, 200};
    const MatrixXd X = randn(300, 3, 5);
    const MatrixXd Y = fir_expand(X, DelaySpec{}, offsets) * randn(18, 5, 6) + randn(300, 5, 7);
    EncodingParams p;
    p.bootstrap.chunk_len = 20;
    p.bootstrap.n_boots = 5;
    p.seed = 11;
    const auto a = fit_encoding(per_tr("X", X, offsets), responses(Y, offsets, 200), p);
    const auto b = fit_encoding(per_tr("X", X, offsets), responses(Y, offsets, 200), p);
    CHECK(a.r == b.r);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    const auto c = fit_encoding(per_tr("X", X, offsets), responses(Y * perm, offsets, 200), p);
    CHECK(max_abs(c.r - (a.r.transpose() * perm).transpose()) < 1e-10);
    CHECK_THROWS(fit_encoding(per_tr("X", X, offsets), responses(Y, offsets, 300), p));
  }

  TEST_CASE("removing the generating feature never raises encoding r") {
    int raised = 0;
    EncodingParams ep;
    ep.bootstrap.chunk_len = 20;
    ep.bootstrap.n_boots = 5;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const std::vector<Index> offsets{0, 150};
      const MatrixXd L = randn(300, 2, 300 + s);
      const MatrixXd W = L * randn(2, 6, 400 + s) + randn(300, 6, 500 + s);
      const MatrixXd Y = fir_expand(L, DelaySpec{}, offsets) * randn(12, 4, 600 + s) + randn(300, 4, 700 + s);
      const auto split = testing::head_train(300, 150);
      const auto resid = remove_feature(per_tr("L", L, offsets), per_tr("W", W, offsets), split, near_ols());
      const auto rm = responses(Y, offsets, 150);
      const double before = fit_encoding(per_tr("W", W, offsets), rm, ep).r.mean();
      const double after = fit_encoding(resid.residual, rm, ep).r.mean();
      raised += after > before;
    }
    CHECK(raised == 0);
  }
}
