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

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "residalign/ceiling.hpp"
#include "residalign/data_model.hpp"
#include "residalign/dsp.hpp"
#include "residalign/ridge.hpp"
#include "residalign/stats.hpp"
#include "residalign/synth.hpp"

namespace residalign {

enum class RemovalMode { single, joint, both };
RemovalMode removal_mode_from_string(std::string_view s);

/// A representation or feature matrix: a file, or an output of the
/// `features` stage when `computed` is set.
struct InputSpec {
  std::string name;
  std::filesystem::path path;
  std::string computed;
  std::vector<Modality> modalities{Modality::reading, Modality::listening};

  bool used_for(Modality m) const;
};

struct SubjectSpec {
  std::string id;
  Modality modality = Modality::listening;
  std::filesystem::path path;
};

struct StorySpec {
  std::string id;
  Index n_trs = 0;
  std::filesystem::path words, phonemes, audio;
};

struct PrecomputedSpec {
  std::string name;  // motion_energy, powspec_ref, articulation_ref, phonological_frames
  std::filesystem::path path;
};

struct StimuliSpec {
  double tr_seconds = kDefaultTrSeconds;
  std::vector<StorySpec> stories;
  std::filesystem::path inventory;  // empty: ARPAbet with diphones from the corpus
  bool monophone_presence = false;
  DspParams dsp;
  std::vector<PrecomputedSpec> precomputed;
};

/// Names the `features` stage can emit, given what the stimuli provide.
std::vector<std::string> computable_features(const StimuliSpec& s);

struct ExperimentConfig {
  std::filesystem::path config_path;  // empty for in-memory configs
  std::filesystem::path base_dir;     // relative paths resolve here
  std::filesystem::path out_dir;

  std::uint64_t rng_seed = 0;
  std::vector<double> lambda_grid = default_lambda_grid();
  std::vector<double> removal_lambda_grid = default_lambda_grid();  // defaults to lambda_grid
  int n_delays = 6;
  Index block_len = 10;
  int n_permutations = 5000;
  double ceiling_threshold = kDefaultCeilingThreshold;
  BootstrapParams bootstrap;
  LambdaScore lambda_score = LambdaScore::mse;

  std::vector<std::string> remove;
  RemovalMode removal_mode = RemovalMode::single;
  std::vector<InputSpec> representations;
  std::vector<InputSpec> features;
  std::vector<SubjectSpec> subjects;
  std::optional<std::pair<std::filesystem::path, std::filesystem::path>> atlas;  // labels, groups
  std::vector<std::string> roi_groups;  // empty: every atlas group

  CeilingPredictor ceiling_predictor = CeilingPredictor::all_voxels;
  Index ceiling_pca = 0;
  int ceiling_min_subset = 2;
  int ceiling_max_subset = 0;

  NormalizeMode normalize_mode = NormalizeMode::per_voxel;
  PermutationMode permutation_mode = PermutationMode::aggregate;
  Alternative contrast_alternative = Alternative::two_sided;
  double percent_decrease_eps = 0.01;
  bool probe = false;

  std::optional<StimuliSpec> stimuli;
  std::optional<SynthSpec> synth;
  int workers = 1;

  nlohmann::json raw;  // the document after overrides, for hashing

  std::vector<Modality> modalities() const;  // with at least one subject, in enum order
  std::vector<const SubjectSpec*> subjects_of(Modality m) const;
  const InputSpec* feature(std::string_view name) const;
  std::filesystem::path synth_dir() const { return out_dir / "synth"; }
};

/// Parse a config document. Throws ConfigError on unknown keys or bad values.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Read a JSON file, apply `key.path=value` overrides (value parsed as JSON,
/// falling back to a string), and parse.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& doc, const std::string& assignment);

struct ValidationReport {
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

/// Cross-checks shapes and story layouts of every referenced file without
/// loading values. Files the synth stage will write are checked only if
/// they already exist.
ValidationReport validate_experiment(const ExperimentConfig& cfg);

}  // namespace residalign
