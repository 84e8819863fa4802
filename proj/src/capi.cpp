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

#include "residalign.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <span>
#include <string>

#include "residalign/config.hpp"
#include "residalign/error.hpp"
#include "residalign/npy.hpp"
#include "residalign/pipeline.hpp"
#include "residalign/residual.hpp"
#include "residalign/ridge.hpp"
#include "residalign/stats.hpp"
#include "residalign/temporal.hpp"

using namespace residalign;

struct ra_matrix {
  MatrixXd m;
};

struct ra_ridge_model {
  RidgeModel model;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ra_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return RA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<ra_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ConfigError(std::string(what) + " is NULL");
}

std::vector<double> grid_of(const double* lambdas, std::size_t n) {
  if (lambdas == nullptr || n == 0) return default_lambda_grid();
  return {lambdas, lambdas + n};
}

std::vector<std::string> overrides_of(const char* const* ov, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    require(ov[i], "override");
    out.emplace_back(ov[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* ra_last_error(void) { return g_last_error.c_str(); }
const char* ra_version(void) { return "0.1.0"; }

ra_status ra_matrix_create(size_t rows, size_t cols, const double* data, ra_matrix** out) {
  return guarded([&] {
    require(out, "out");
    auto* h = new ra_matrix;
    h->m = MatrixXd::Zero(static_cast<Index>(rows), static_cast<Index>(cols));
    if (data != nullptr) {
      h->m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          data, static_cast<Index>(rows), static_cast<Index>(cols));
    }
    *out = h;
  });
}

ra_status ra_matrix_load(const char* npy_path, ra_matrix** out) {
  return guarded([&] {
    require(npy_path, "path");
    require(out, "out");
    auto m = npy::read(npy_path);
    *out = new ra_matrix{std::move(m)};
  });
}

ra_status ra_matrix_save(const ra_matrix* m, const char* npy_path) {
  return guarded([&] {
    require(m, "matrix");
    require(npy_path, "path");
    npy::write(npy_path, m->m);
  });
}

size_t ra_matrix_rows(const ra_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }
size_t ra_matrix_cols(const ra_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }

ra_status ra_matrix_copy(const ra_matrix* m, double* out, size_t capacity) {
  return guarded([&] {
    require(m, "matrix");
    require(out, "out");
    if (capacity < static_cast<size_t>(m->m.size())) throw ConfigError("output buffer too small");
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out, m->m.rows(), m->m.cols()) = m->m;
  });
}

void ra_matrix_free(ra_matrix* m) { delete m; }

ra_status ra_ridge_fit(const ra_matrix* X, const ra_matrix* Y, const double* lambdas,
                       size_t n_lambdas, uint64_t seed, ra_ridge_model** out) {
  return guarded([&] {
    require(X, "X");
    require(Y, "Y");
    require(out, "out");
    const auto grid = grid_of(lambdas, n_lambdas);
    auto fit = bootstrap_ridge(X->m, Y->m, grid, BootstrapParams{}, seed);
    *out = new ra_ridge_model{std::move(fit.model)};
  });
}

ra_status ra_ridge_predict(const ra_ridge_model* model, const ra_matrix* X, ra_matrix** out) {
  return guarded([&] {
    require(model, "model");
    require(X, "X");
    require(out, "out");
    *out = new ra_matrix{predict(model->model, X->m)};
  });
}

ra_status ra_ridge_lambdas(const ra_ridge_model* model, double* out, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto& l = model->model.lambda_per_target;
    if (capacity < static_cast<size_t>(l.size())) throw ConfigError("output buffer too small");
    std::copy(l.data(), l.data() + l.size(), out);
  });
}

void ra_ridge_free(ra_ridge_model* model) { delete model; }

ra_status ra_remove_feature(const ra_matrix* L, const ra_matrix* W, const uint8_t* train,
                            const double* lambdas, size_t n_lambdas, uint64_t seed,
                            ra_matrix** residual) {
  return guarded([&] {
    require(L, "L");
    require(W, "W");
    require(train, "train");
    require(residual, "residual");
    auto wrap = [](const MatrixXd& m, const char* name) {
      FeatureMatrix fm;
      fm.name = name;
      fm.sampling = Sampling::per_tr();
      fm.story_offsets = {0};
      fm.values = m;
      return fm;
    };
    std::vector<Split> split(static_cast<std::size_t>(W->m.rows()));
    for (std::size_t i = 0; i < split.size(); ++i) split[i] = train[i] ? Split::train : Split::test;
    RemovalParams p;
    p.lambda_grid = grid_of(lambdas, n_lambdas);
    p.seed = seed;
    auto res = remove_feature(wrap(L->m, "L"), wrap(W->m, "W"), split, p);
    *residual = new ra_matrix{std::move(res.residual.values)};
  });
}

ra_status ra_lanczos_downsample(const ra_matrix* values, const double* times, size_t n_trs,
                                double tr_seconds, ra_matrix** out) {
  return guarded([&] {
    require(values, "values");
    require(times, "times");
    require(out, "out");
    TrGrid grid;
    grid.tr_seconds = tr_seconds;
    grid.story_trs = {static_cast<Index>(n_trs)};
    const auto target = grid.centres(0);
    std::span<const double> src(times, static_cast<std::size_t>(values->m.rows()));
    *out = new ra_matrix{lanczos_downsample(values->m, src, target, 3, 0.5 / tr_seconds)};
  });
}

ra_status ra_wilcoxon(const double* differences, size_t n, int alternative, double* p) {
  return guarded([&] {
    require(differences, "differences");
    require(p, "p");
    if (alternative < 0 || alternative > 2) throw ConfigError("alternative must be 0, 1 or 2");
    static const Alternative alts[] = {Alternative::two_sided, Alternative::greater,
                                       Alternative::less};
    *p = wilcoxon_signed_rank(std::span<const double>(differences, n), alts[alternative]).p;
  });
}

ra_status ra_config_validate(const char* config_path, const char* const* overrides,
                             size_t n_overrides) {
  return guarded([&] {
    require(config_path, "config path");
    const auto cfg = load_config(config_path, overrides_of(overrides, n_overrides));
    const auto report = validate_experiment(cfg);
    if (!report.ok()) {
      std::string msg;
      for (const auto& m : report.mismatches) msg += (msg.empty() ? "" : "\n") + m;
      throw ValidationError(msg);
    }
  });
}

ra_status ra_pipeline_run(const char* config_path, const char* stage, const char* const* overrides,
                          size_t n_overrides, int workers, int verbose, char** summary_json) {
  return guarded([&] {
    require(config_path, "config path");
    require(stage, "stage");
    const auto st = pipeline::stage_from_string(stage);
    const auto cfg = load_config(config_path, overrides_of(overrides, n_overrides));
    pipeline::RunOptions opts;
    opts.workers = workers;
    if (verbose) opts.log = &std::cerr;
    const auto summary = pipeline::run(cfg, st, opts);
    if (summary_json != nullptr) {
      const auto s = summary.to_json();
      *summary_json = static_cast<char*>(std::malloc(s.size() + 1));
      if (*summary_json == nullptr) throw ComputeError("out of memory");
      std::memcpy(*summary_json, s.c_str(), s.size() + 1);
    }
  });
}

void ra_string_free(char* s) { std::free(s); }

}  // extern "C"
