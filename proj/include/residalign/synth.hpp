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

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign {

/// Synthetic experiment: a representation W = L A + S B + noise built from a
/// designated low-level feature L and a semantic latent S, and subjects whose
/// voxels respond to a FIR-filtered mix sqrt(f) L b_v + sqrt(1 - f) S g_v.
struct SynthSpec {
  int n_subjects = 6;
  Index n_trs = 600;
  Index n_voxels = 200;
  int n_stories = 4;
  int n_test_stories = 1;  // the last stories form the test split
  Index rep_dim = 16;
  Index lowlevel_dim = 4;
  Index semantic_dim = 8;
  double snr = 4.0;  // signal / noise variance per voxel; infinity removes noise
  double lowlevel_fraction = 0.5;
  std::vector<double> fir_kernel{0.0, 0.5, 1.0, 0.8, 0.4, 0.15};  // delays 1..6 TRs
  double rep_noise = 0.1;
  double tr_seconds = kDefaultTrSeconds;
  std::vector<std::string> roi_groups{"AG", "LTC", "IFG", "MFG", "EVC", "AC"};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthTruth {
  double lowlevel_fraction = 0.0;
  double snr = 0.0;
  /// Expected correlation of a voxel with the mean of k other subjects'
  /// same voxel, pooled over the subset sizes the ceiling evaluates.
  double analytic_ceiling = 0.0;
  /// Correlation of a voxel with its noiseless signal.
  double analytic_alignment = 0.0;
};

struct SynthData {
  FeatureMatrix representation;  // W
  FeatureMatrix lowlevel;        // L
  FeatureMatrix semantic;        // S
  std::vector<ResponseMatrix> subjects;
  RoiAtlas atlas;
  SynthTruth truth;
};

SynthData generate(const SynthSpec& spec);

/// File layout written by write_synth, relative to its directory.
struct SynthPaths {
  std::filesystem::path representation, lowlevel, semantic, atlas_labels, atlas_groups,
      truth;
  std::vector<std::filesystem::path> subjects;
};
SynthPaths synth_paths(const std::filesystem::path& dir, const SynthSpec& spec);

SynthPaths write_synth(const SynthData& data, const std::filesystem::path& dir);

std::string truth_to_json(const SynthTruth& t);

}  // namespace residalign
