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

#include <Eigen/Cholesky>

#include "residalign/error.hpp"
#include "residalign/ridge.hpp"

using namespace residalign;
using testing::max_abs;
using testing::randn;

namespace {

// Dense normal equations, solved by LDLT: an independent route from the SVD.
MatrixXd normal_equations(const MatrixXd& X, const MatrixXd& Y, double lambda) {
  MatrixXd G = X.transpose() * X;
  G.diagonal().array() += lambda;
  return G.ldlt().solve(X.transpose() * Y);
}

}  // namespace

TEST_SUITE("ridge") {
  TEST_CASE("exact linear relation with vanishing penalty") {
    MatrixXd X(3, 1), Y(3, 1);
    X << 1, 2, 3;
    Y << 2, 4, 6;
    const auto m = ridge_fit(X, Y, 1e-12);
    CHECK(m.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  }

  TEST_CASE("hand case lambda = 1 gives 5/6") {
    MatrixXd X(2, 1), Y(2, 1);
    X << 1, 2;
    Y << 1, 2;
    CHECK(ridge_fit(X, Y, 1.0).weights(0, 0) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  }

  TEST_CASE("random 20x5 instance matches the dense oracle") {
    const MatrixXd X = randn(20, 5, 1), Y = randn(20, 3, 2);
    const auto m = ridge_fit(X, Y, 10.0);
    CHECK(max_abs(m.weights - normal_equations(X, Y, 10.0)) < 1e-8);
    CHECK(max_abs(predict(m, X) - X * normal_equations(X, Y, 10.0)) < 1e-8);
  }

  TEST_CASE("100 random instances match the oracle") {
    std::mt19937_64 rng(7);
    const auto grid = default_lambda_grid();
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const Index n = 2 + static_cast<Index>(rng() % 49);
      const Index d = 1 + static_cast<Index>(rng() % 10);
      const Index v = 1 + static_cast<Index>(rng() % 5);
      const double lambda = grid[rng() % grid.size()];
      const MatrixXd X = randn(n, d, rng()), Y = randn(n, v, rng());
      worst = std::max(worst, max_abs(ridge_fit(X, Y, lambda).weights - normal_equations(X, Y, lambda)));
    }
    CHECK(worst < 1e-8);
  }

  TEST_CASE("shrinkage is monotone in lambda") {
    const MatrixXd X = randn(30, 6, 3), Y = randn(30, 4, 4);
    const RidgeSolver solver(X);
    double prev = std::numeric_limits<double>::infinity();
    for (double l : log_grid(0.01, 1e4, 25)) {
      const double norm = solver.weights(Y, l).norm();
      CHECK(norm <= prev + 1e-12);
      prev = norm;
    }
  }

  TEST_CASE("zero weights predict zeros and bad input is rejected") {
    RidgeModel m;
    m.weights = MatrixXd::Zero(3, 2);
    m.reset_standardization();
    CHECK(max_abs(predict(m, randn(5, 3, 1))) == 0.0);
    CHECK_THROWS_AS(ridge_fit(randn(4, 2, 1), randn(5, 1, 1), 1.0), ComputeError);
    CHECK_THROWS_AS(ridge_fit(randn(4, 2, 1), randn(4, 1, 1), 0.0), ComputeError);
  }

  TEST_CASE("held-out chunk arithmetic") {
    BootstrapParams p;
    p.n_boots = 1;
    p.chunk_len = 10;
    p.holdout_frac = 0.2;
    const std::vector<Index> offsets{0};
    const auto chunks = make_chunks(100, offsets, 10);
    CHECK(chunks.size() == 10);
    const Index k = held_out_chunk_count(100, 10, p);
    CHECK(k == 2);
    CHECK(draw_holdout(chunks, k, 5).size() == 20);
  }

  TEST_CASE("chunks never cross story starts") {
    const std::vector<Index> offsets{0, 25, 60};
    const auto chunks = make_chunks(100, offsets, 10);
    for (auto [b, e] : chunks) {
      for (Index s : offsets) CHECK_FALSE((b < s && s < e));
    }
    // 25 -> 10,10,5; 35 -> 10,10,10,5; 40 -> 4 chunks
    CHECK(chunks.size() == 11);
  }

  TEST_CASE("noiseless targets pick the smallest lambda") {
    const MatrixXd X = randn(200, 5, 11);
    const MatrixXd Y = X * randn(5, 8, 12);
    const std::vector<double> grid{10, 100, 1000};
    BootstrapParams p;
    p.n_boots = 5;
    p.chunk_len = 10;
    for (auto score : {LambdaScore::mse, LambdaScore::pearson}) {
      const auto fit = bootstrap_ridge(X, Y, grid, p, 3, {}, score);
      for (auto s : fit.selected) CHECK(s == 0);
    }
  }

  TEST_CASE("independent noise selects the grid maximum for most targets") {
    const BootstrapParams p;  // library defaults
    const auto grid = default_lambda_grid();
    std::size_t top = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto fit = bootstrap_ridge(randn(1000, 10, 100 + seed), randn(1000, 10, 200 + seed), grid,
                                       p, seed);
      for (auto s : fit.selected) {
        top += s == grid.size() - 1;
        ++total;
      }
    }
    CHECK(static_cast<double>(top) / static_cast<double>(total) >= 0.8);
  }

  TEST_CASE("bootstrap is reproducible and single-lambda grids skip it") {
    const MatrixXd X = randn(120, 4, 1), Y = randn(120, 3, 2) + X * randn(4, 3, 3);
    BootstrapParams p;
    p.n_boots = 4;
    p.chunk_len = 10;
    const auto a = bootstrap_ridge(X, Y, default_lambda_grid(), p, 99);
    const auto b = bootstrap_ridge(X, Y, default_lambda_grid(), p, 99);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.mean_score == b.mean_score);
    const std::vector<double> one{5.0};
    const auto c = bootstrap_ridge(X, Y, one, p, 1);
    CHECK(max_abs(c.model.weights - normal_equations(X, Y, 5.0)) < 1e-8);
  }

  TEST_CASE("R2 hand case and probe behaviour") {
    MatrixXd pred(3, 1), target(3, 1);
    pred << 1, 2, 3;
    target << 1, 2, 4;
    CHECK(r2_per_column(pred, target)(0) == doctest::Approx(1.0 - 1.0 / (14.0 / 3.0)).epsilon(1e-12));

    const auto split = testing::head_train(300, 240);
    const MatrixXd Wv = randn(300, 6, 5);
    BootstrapParams p;
    p.n_boots = 5;
    p.chunk_len = 10;
    const auto linear = probe_r2(testing::per_tr("W", Wv), testing::per_tr("L", Wv * randn(6, 2, 6)),
                                 log_grid(1e-3, 10, 5), split, p, 1);
    CHECK(linear.r2.minCoeff() > 0.999);
    double worst = -1;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto indep = probe_r2(testing::per_tr("W", randn(300, 6, 50 + s)),
                                  testing::per_tr("L", randn(300, 1, 80 + s)),
                                  default_lambda_grid(), split, p, s);
      worst = std::max(worst, indep.r2(0));
    }
    CHECK(worst <= 0.05);
  }
}
