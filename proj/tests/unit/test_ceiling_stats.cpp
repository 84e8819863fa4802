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

#include <cmath>
#include <set>

#include "residalign/ceiling.hpp"
#include "residalign/error.hpp"
#include "residalign/stats.hpp"

using namespace residalign;
using testing::max_abs;
using testing::randn;

namespace {

// Subjects share a per-voxel latent time course scaled to the given SNR.
std::vector<ResponseMatrix> shared_latent(int n_subjects, Index n, Index v, double snr,
                                          std::uint64_t seed) {
  const MatrixXd latent = randn(n, v, seed);
  std::vector<ResponseMatrix> out;
  for (int i = 0; i < n_subjects; ++i) {
    ResponseMatrix rm;
    rm.subject_id = "sub-0" + std::to_string(i + 1);
    rm.story_offsets = {0, n / 2, 3 * n / 4};
    rm.split = testing::head_train(n, 3 * n / 4);
    rm.values = std::sqrt(snr) * latent + randn(n, v, seed * 100 + static_cast<std::uint64_t>(i) + 1);
    out.push_back(std::move(rm));
  }
  return out;
}

CeilingParams quick_ceiling(CeilingPredictor pred) {
  CeilingParams p;
  p.predictor = pred;
  p.bootstrap.n_boots = 5;
  p.bootstrap.chunk_len = 10;
  p.lambda_grid = log_grid(0.1, 1000, 5);
  return p;
}

// Two-sided p of the signed-rank statistic by enumerating every sign pattern.
double wilcoxon_brute_force(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0) d.push_back(x);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      below += std::abs(d[j]) < std::abs(d[i]);
      equal += std::abs(d[j]) == std::abs(d[i]);
    }
    rank[i] = below + (equal + 1) / 2;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i) w += d[i] > 0 ? rank[i] : 0;
  double le = 0, ge = 0;
  const std::size_t patterns = std::size_t{1} << n;
  for (std::size_t m = 0; m < patterns; ++m) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (m >> i & 1) ? rank[i] : 0;
    le += s <= w + 1e-9;
    ge += s >= w - 1e-9;
  }
  return std::min(1.0, 2 * std::min(le, ge) / static_cast<double>(patterns));
}

}  // namespace

TEST_SUITE("ceiling") {
  TEST_CASE("combinations") {
    const std::vector<std::size_t> pool{0, 2, 3, 5};
    const auto c = combinations(pool, 2);
    CHECK(c.size() == 6);
    CHECK(c.front() == std::vector<std::size_t>{0, 2});
    CHECK(c.back() == std::vector<std::size_t>{3, 5});
    CHECK(combinations(pool, 0).size() == 1);
    CHECK(combinations(pool, 5).empty());
  }

  TEST_CASE("identical subjects reach a ceiling near one") {
    auto subs = shared_latent(3, 200, 6, 1.0, 1);
    for (auto& s : subs) s.values = subs[0].values;
    const auto maps = cross_subject_ceiling(subs, quick_ceiling(CeilingPredictor::all_voxels));
    for (const auto& m : maps) CHECK(m.ceiling.minCoeff() > 0.99);
  }

  TEST_CASE("independent subjects give a ceiling near zero") {
    auto subs = shared_latent(4, 400, 20, 0.0, 2);
    const auto maps = cross_subject_ceiling(subs, quick_ceiling(CeilingPredictor::matched_voxel));
    double mean = 0;
    for (const auto& m : maps) {
      for (const auto& [s, r] : m.by_size) mean += r.mean() / static_cast<double>(m.by_size.size());
      CHECK(m.subsets_per_size.at(2) == 3);
      CHECK(m.subsets_per_size.at(4) == 1);
    }
    CHECK(std::abs(mean / 4) < 0.05);
  }

  TEST_CASE("pooled ceiling matches the shared-latent closed form") {
    // Target = sqrt(snr) z + e; the mean of k others correlates with it at
    // snr / sqrt((snr + 1)(snr + 1/k)).
    const double snr = 1.0;
    const int n = 5;
    auto subs = shared_latent(n, 800, 12, snr, 3);
    const auto maps = cross_subject_ceiling(subs, quick_ceiling(CeilingPredictor::matched_voxel));
    double expect = 0, subsets = 0;
    for (int k = 1; k < n; ++k) {
      const double c = std::tgamma(n) / (std::tgamma(k + 1) * std::tgamma(n - k));
      expect += c * snr / std::sqrt((snr + 1) * (snr + 1.0 / k));
      subsets += c;
    }
    expect /= subsets;
    double got = 0;
    for (const auto& m : maps) got += m.ceiling.mean() / n;
    CHECK(got == doctest::Approx(expect).epsilon(0.05 / expect));
  }

  TEST_CASE("ceiling grows with subset size") {
    std::map<int, double> curve;
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto subs = shared_latent(5, 240, 4, 0.5, 10 + seed);
      const auto maps = cross_subject_ceiling(subs, quick_ceiling(CeilingPredictor::matched_voxel));
      std::map<int, double> one;
      for (const auto& m : maps) {
        for (const auto& [s, r] : m.by_size) one[s] += r.mean();
      }
      for (int s = 3; s <= 5; ++s) violations += one[s] < one[s - 1];
      for (auto& [s, v] : one) curve[s] += v;
    }
    for (int s = 3; s <= 5; ++s) CHECK(curve[s] > curve[s - 1]);
    CHECK(violations <= 6);  // out of 60 adjacent pairs
  }

  TEST_CASE("mismatched subjects are rejected") {
    auto subs = shared_latent(3, 100, 4, 1.0, 4);
    subs[1].values = randn(100, 5, 1);
    CHECK_THROWS_AS(cross_subject_ceiling(subs, CeilingParams{}), ValidationError);
    const std::vector<ResponseMatrix> one{subs[0]};
    CHECK_THROWS_AS(cross_subject_ceiling(one, CeilingParams{}), ValidationError);
  }

  TEST_CASE("PCA keeps the requested number of train axes") {
    const MatrixXd X = randn(50, 8, 1);
    std::vector<Index> train(40);
    for (Index i = 0; i < 40; ++i) train[i] = i;
    CHECK(pca_reduce(X, train, 3).cols() == 3);
    CHECK(pca_reduce(X, train, 0) == X);
  }
}

TEST_SUITE("stats") {
  TEST_CASE("normalized alignment on a worked example") {
    VectorXd r(4), c(4);
    r << 0.2, 0.3, 0.1, 0.5;
    c << 0.4, 0.6, 0.04, 0.5;
    const auto rep = normalize_alignment(r, c);
    CHECK(rep.mask == std::vector<bool>{true, true, false, true});
    CHECK(std::isnan(rep.normalized(2)));
    CHECK(rep.subject_mean == doctest::Approx((0.5 + 0.5 + 1.0) / 3));
    const auto rom = normalize_alignment(r, c, 0.05, nullptr, {}, NormalizeMode::ratio_of_means);
    CHECK(rom.subject_mean == doctest::Approx(1.0 / 1.5));
    // Scaling r and the ceiling together leaves the ratio alone.
    const auto scaled = normalize_alignment(0.5 * r, 0.5 * c, 0.025);
    CHECK(scaled.subject_mean == doctest::Approx(rep.subject_mean));
    CHECK_THROWS_AS(normalize_alignment(r, VectorXd::Constant(4, 0.01)), ComputeError);
  }

  TEST_CASE("ROI means recompose the subject mean") {
    RoiAtlas atlas;
    atlas.voxel_labels = {"A", "B", "A", "B", "B", "C"};
    atlas.groups = {{"A", {"A"}}, {"B", {"B"}}, {"C", {"C"}}};
    VectorXd r(6), c(6);
    r << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
    c << 0.5, 0.5, 0.5, 0.5, 0.5, 0.01;
    const std::vector<std::string> groups{"A", "B", "C"};
    const auto rep = normalize_alignment(r, c, 0.05, &atlas, groups);
    REQUIRE(rep.roi.size() == 3);
    CHECK(rep.roi[2].empty);
    CHECK(std::isnan(rep.roi[2].mean));
    const double recomposed =
        (rep.roi[0].mean * rep.roi[0].count + rep.roi[1].mean * rep.roi[1].count) /
        static_cast<double>(rep.roi[0].count + rep.roi[1].count);
    CHECK(recomposed == doctest::Approx(rep.subject_mean));
  }

  TEST_CASE("block permutation keeps blocks whole and inside their story") {
    const std::vector<Index> offsets{0};
    const auto p = permute_blocks(100, offsets, 10, 3);
    REQUIRE(p.size() == 100);
    CHECK(std::set<Index>(p.begin(), p.end()).size() == 100);
    for (std::size_t b = 0; b < 10; ++b) {
      CHECK(p[b * 10] % 10 == 0);
      for (std::size_t i = 1; i < 10; ++i) CHECK(p[b * 10 + i] == p[b * 10] + static_cast<Index>(i));
    }
    const std::vector<Index> two{0, 25};
    const auto q = permute_blocks(60, two, 10, 4);
    for (std::size_t i = 0; i < 25; ++i) CHECK(q[i] < 25);
    for (std::size_t i = 25; i < 60; ++i) CHECK(q[i] >= 25);
    CHECK(permute_blocks(100, offsets, 10, 3) == p);
  }

  TEST_CASE("perfect prediction reaches the smallest attainable p") {
    const MatrixXd y = randn(100, 5, 1);
    const std::vector<Index> offsets{0};
    PermutationParams pp;
    pp.n_permutations = 5000;
    const auto res = block_permutation_test(y, y, offsets, {}, pp);
    CHECK(res.observed == doctest::Approx(1.0));
    CHECK(res.p == doctest::Approx(1.0 / 5001));
  }

  TEST_CASE("null p-values are calibrated") {
    const std::vector<Index> offsets{0};
    PermutationParams pp;
    pp.n_permutations = 99;
    int hits = 0;
    const int reps = 1000;
    for (int i = 0; i < reps; ++i) {
      pp.seed = static_cast<std::uint64_t>(i);
      const auto res = block_permutation_test(randn(100, 3, 2 * i + 1), randn(100, 3, 2 * i + 2),
                                              offsets, {}, pp);
      hits += res.p <= 0.05;
    }
    CHECK(std::abs(static_cast<double>(hits) / reps - 0.05) <= 0.02);
  }

  TEST_CASE("per-voxel permutation fills only masked voxels") {
    const MatrixXd y = randn(60, 3, 5);
    const std::vector<Index> offsets{0};
    PermutationParams pp;
    pp.n_permutations = 50;
    pp.mode = PermutationMode::per_voxel;
    const auto res = block_permutation_test(y, y, offsets, {true, false, true}, pp);
    CHECK(std::isnan(res.voxel_p(1)));
    CHECK(res.voxel_p(0) == doctest::Approx(1.0 / 51));
    CHECK_THROWS_AS(block_permutation_test(y, y, offsets, {false, false, false}, pp), ComputeError);
  }

  TEST_CASE("Wilcoxon matches brute-force enumeration") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> v(-6, 6);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng() % 8;
      std::vector<double> d(n);
      for (auto& x : d) x = v(rng) * 0.5;  // small integers give ties and zeros
      const auto res = wilcoxon_signed_rank(d);
      CHECK(res.p == doctest::Approx(wilcoxon_brute_force(d)).epsilon(1e-12));
    }
  }

  TEST_CASE("Wilcoxon worked values") {
    const std::vector<double> pos{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    CHECK(wilcoxon_signed_rank(pos).p == doctest::Approx(0.03125));
    CHECK(wilcoxon_signed_rank(pos, Alternative::greater).p == doctest::Approx(1.0 / 64));
    const std::vector<double> pm{1.0, -1.0};
    CHECK(wilcoxon_signed_rank(pm).p == 1.0);
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(wilcoxon_signed_rank(zeros).all_zero);
    // A monotone odd transform keeps signs and rank order.
    std::vector<double> d = {0.3, -1.2, 2.0, 0.7, -0.1, 1.5, 0.9, -0.4, 2.2};
    std::vector<double> cubed;
    for (double x : d) cubed.push_back(x * x * x);
    CHECK(wilcoxon_signed_rank(d).p == wilcoxon_signed_rank(cubed).p);
    // Normal branch above the exact limit.
    std::vector<double> big;
    for (int i = 1; i <= 40; ++i) big.push_back(i % 3 == 0 ? -i : i);
    const auto approx = wilcoxon_signed_rank(big);
    CHECK_FALSE(approx.exact);
    CHECK(approx.p > 0);
    CHECK(approx.p < 1);
  }

  TEST_CASE("feature correlation and first principal component") {
    const MatrixXd a = randn(50, 1, 1);
    const std::vector<FeatureMatrix> fs{testing::per_tr("a", a), testing::per_tr("neg", -2 * a),
                                        testing::per_tr("flat", MatrixXd::Constant(50, 1, 3.0))};
    const auto c = feature_correlation(fs);
    CHECK(c.r(0, 1) == doctest::Approx(-1.0));
    CHECK(c.r(0, 0) == 1.0);
    CHECK(c.degenerate[2]);
    CHECK(c.r(2, 2) == 0.0);
    const MatrixXd two = a * Eigen::RowVector2d(3.0, -1.0);
    const auto pc = first_principal_component(testing::per_tr("two", two));
    CHECK(pc.dim() == 1);
    const std::vector<FeatureMatrix> pair{testing::per_tr("a", a), pc};
    CHECK(feature_correlation(pair).r(0, 1) == doctest::Approx(1.0));
  }
}
