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

#include "residalign/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "residalign/columns.hpp"
#include "residalign/error.hpp"
#include "residalign/io.hpp"
#include "residalign/rng.hpp"

namespace residalign {

void SynthSpec::validate() const {
  if (n_subjects < 2) throw ConfigError("synth: n_subjects must be >= 2");
  if (n_stories < 2 || n_test_stories < 1 || n_test_stories >= n_stories) {
    throw ConfigError("synth: need >= 2 stories with 1 <= n_test_stories < n_stories");
  }
  if (n_trs < 2 * n_stories) throw ConfigError("synth: too few TRs for the story count");
  if (n_voxels < 1 || rep_dim < 1 || lowlevel_dim < 1 || semantic_dim < 1) {
    throw ConfigError("synth: dimensions must be positive");
  }
  if (!(snr >= 0)) throw ConfigError("synth: snr must be >= 0");
  if (!(lowlevel_fraction >= 0 && lowlevel_fraction <= 1)) {
    throw ConfigError("synth: lowlevel_fraction must lie in [0, 1]");
  }
  if (fir_kernel.empty()) throw ConfigError("synth: empty FIR kernel");
  if (!(rep_noise >= 0)) throw ConfigError("synth: rep_noise must be >= 0");
  if (roi_groups.empty()) throw ConfigError("synth: need at least one ROI group");
}

namespace {

MatrixXd gaussian(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> nd;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

VectorXd unit_variance(const VectorXd& x) {
  const double mu = x.mean();
  const double sd = std::sqrt((x.array() - mu).square().mean());
  if (sd == 0.0) return VectorXd::Zero(x.size());
  return (x.array() - mu) / sd;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const SeedTree seeds(spec.seed);
  const Index N = spec.n_trs;

  std::vector<Index> offsets;
  const Index per_story = N / spec.n_stories;
  for (int s = 0; s < spec.n_stories; ++s) offsets.push_back(s * per_story);
  std::vector<Split> story_split(static_cast<std::size_t>(spec.n_stories), Split::train);
  for (int s = spec.n_stories - spec.n_test_stories; s < spec.n_stories; ++s) {
    story_split[s] = Split::test;
  }
  const auto split = expand_story_split(story_split, offsets, N);

  SynthData d;
  auto make_feature = [&](const std::string& name, MatrixXd values) {
    FeatureMatrix fm;
    fm.name = name;
    fm.sampling = Sampling::per_tr(spec.tr_seconds);
    fm.story_offsets = offsets;
    fm.values = std::move(values);
    return fm;
  };
  auto rng_l = seeds.stream("lowlevel");
  auto rng_s = seeds.stream("semantic");
  auto rng_mix = seeds.stream("mixing");
  auto rng_noise = seeds.stream("representation_noise");
  d.lowlevel = make_feature("lowlevel", gaussian(rng_l, N, spec.lowlevel_dim));
  d.semantic = make_feature("semantic", gaussian(rng_s, N, spec.semantic_dim));
  const MatrixXd A = gaussian(rng_mix, spec.lowlevel_dim, spec.rep_dim);
  const MatrixXd B = gaussian(rng_mix, spec.semantic_dim, spec.rep_dim);
  d.representation = make_feature(
      "representation", d.lowlevel.values * A + d.semantic.values * B +
                            spec.rep_noise * gaussian(rng_noise, N, spec.rep_dim));

  // Noiseless voxel signals; each voxel draws from its own stream so the
  // first k voxels do not depend on n_voxels.
  const double f = spec.lowlevel_fraction;
  const bool noiseless = std::isinf(spec.snr);
  MatrixXd signal(N, spec.n_voxels);
  const auto ranges = story_ranges(offsets, N);
  for (Index v = 0; v < spec.n_voxels; ++v) {
    auto rng = seeds.stream("voxel/" + std::to_string(v));
    const VectorXd beta = gaussian(rng, spec.lowlevel_dim, 1);
    const VectorXd gamma = gaussian(rng, spec.semantic_dim, 1);
    const VectorXd u = std::sqrt(f) * unit_variance(d.lowlevel.values * beta) +
                       std::sqrt(1.0 - f) * unit_variance(d.semantic.values * gamma);
    VectorXd x = VectorXd::Zero(N);
    for (auto [b, e] : ranges) {
      for (Index t = b; t < e; ++t) {
        for (std::size_t k = 0; k < spec.fir_kernel.size(); ++k) {
          const Index src = t - static_cast<Index>(k) - 1;
          if (src >= b) x(t) += spec.fir_kernel[k] * u(src);
        }
      }
    }
    x = unit_variance(x);
    signal.col(v) = noiseless ? x : VectorXd(std::sqrt(spec.snr) * x);
  }

  for (int i = 0; i < spec.n_subjects; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "sub-%02d", i + 1);
    ResponseMatrix rm;
    rm.subject_id = id;
    rm.modality = Modality::listening;
    rm.tr_seconds = spec.tr_seconds;
    rm.story_offsets = offsets;
    rm.split = split;
    rm.values = signal;
    if (!noiseless) {
      std::normal_distribution<double> nd;
      for (Index v = 0; v < spec.n_voxels; ++v) {
        auto rng = seeds.stream(std::string(id) + "/voxel/" + std::to_string(v));
        for (Index t = 0; t < N; ++t) rm.values(t, v) += nd(rng);
      }
    }
    d.subjects.push_back(std::move(rm));
  }

  for (Index v = 0; v < spec.n_voxels; ++v) {
    d.atlas.voxel_labels.push_back(spec.roi_groups[static_cast<std::size_t>(v) % spec.roi_groups.size()]);
  }
  for (const auto& g : spec.roi_groups) d.atlas.groups[g] = {g};

  d.truth.lowlevel_fraction = f;
  d.truth.snr = spec.snr;
  if (noiseless) {
    d.truth.analytic_ceiling = 1.0;
    d.truth.analytic_alignment = 1.0;
  } else {
    const int others = spec.n_subjects - 1;
    double pooled = 0.0, subsets = 0.0;
    for (int k = 1; k <= others; ++k) {
      const double rho =
          spec.snr / std::sqrt((spec.snr + 1.0) * (spec.snr + 1.0 / k));
      pooled += binomial(others, k) * rho;
      subsets += binomial(others, k);
    }
    d.truth.analytic_ceiling = pooled / subsets;
    d.truth.analytic_alignment = std::sqrt(spec.snr / (spec.snr + 1.0));
  }
  return d;
}

SynthPaths synth_paths(const std::filesystem::path& dir, const SynthSpec& spec) {
  SynthPaths p;
  p.representation = dir / "representation.npy";
  p.lowlevel = dir / "lowlevel.npy";
  p.semantic = dir / "semantic.npy";
  p.atlas_labels = dir / "atlas_labels.csv";
  p.atlas_groups = dir / "atlas_groups.json";
  p.truth = dir / "truth.json";
  for (int i = 0; i < spec.n_subjects; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sub-%02d.npy", i + 1);
    p.subjects.push_back(dir / "subjects" / name);
  }
  return p;
}

std::string truth_to_json(const SynthTruth& t) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return "inf";
  };
  nlohmann::json j{{"lowlevel_fraction", t.lowlevel_fraction},
                   {"snr", num(t.snr)},
                   {"analytic_ceiling", t.analytic_ceiling},
                   {"analytic_alignment", t.analytic_alignment}};
  return j.dump(1) + "\n";
}

SynthPaths write_synth(const SynthData& data, const std::filesystem::path& dir) {
  SynthSpec shape;
  shape.n_subjects = static_cast<int>(data.subjects.size());
  const auto p = synth_paths(dir, shape);
  std::filesystem::create_directories(dir / "subjects");
  io::save_feature_matrix(data.representation, p.representation);
  io::save_feature_matrix(data.lowlevel, p.lowlevel);
  io::save_feature_matrix(data.semantic, p.semantic);
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    io::save_response_matrix(data.subjects[i], p.subjects[i]);
  }
  io::save_atlas(data.atlas, p.atlas_labels, p.atlas_groups);
  io::write_file_atomic(p.truth, truth_to_json(data.truth));
  return p;
}

}  // namespace residalign
