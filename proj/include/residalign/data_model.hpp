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

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace residalign {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kDefaultTrSeconds = 2.0045;

enum class SamplingKind { per_tr, frame_rate, irregular };

/// How the rows of a FeatureMatrix map to time. Onsets of irregular
/// sampling are story-local seconds, one per row.
struct Sampling {
  SamplingKind kind = SamplingKind::per_tr;
  double tr_seconds = kDefaultTrSeconds;
  double hz = 0.0;
  std::vector<double> onsets;

  static Sampling per_tr(double tr_seconds = kDefaultTrSeconds);
  static Sampling frame_rate(double hz);
  static Sampling irregular(std::vector<double> onsets);
};

std::string_view to_string(SamplingKind kind);
SamplingKind sampling_kind_from_string(std::string_view s);

/// Stimulus features or model activations. Stores W, L_i and residuals.
struct FeatureMatrix {
  std::string name;
  Sampling sampling;
  MatrixXd values;
  std::vector<Index> story_offsets{0};

  Index n_rows() const { return values.rows(); }
  Index dim() const { return values.cols(); }

  // Throws ValidationError on any broken invariant.
  void validate() const;
};

enum class Modality { reading, listening };
std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

enum class Split : std::uint8_t { train, test };

struct ResponseMatrix {
  std::string subject_id;
  Modality modality = Modality::listening;
  MatrixXd values;
  std::vector<Split> split;  // one entry per row
  double tr_seconds = kDefaultTrSeconds;
  std::vector<Index> story_offsets{0};

  Index n_trs() const { return values.rows(); }
  Index n_voxels() const { return values.cols(); }
  void validate() const;
};

enum class AnnotationKind { word, phoneme };

struct Token {
  std::string text;
  double onset = 0.0;
  double duration = 0.0;
};

struct TimedAnnotation {
  AnnotationKind kind = AnnotationKind::word;
  std::vector<Token> tokens;
  std::string story_id;

  void validate() const;
};

struct RoiAtlas {
  std::vector<std::string> voxel_labels;
  std::map<std::string, std::vector<std::string>> groups;

  Index n_voxels() const { return static_cast<Index>(voxel_labels.size()); }
  void validate() const;
  // Voxel indices whose label is in the group. Throws ConfigError for an
  // unknown group; "whole_brain" always names every voxel.
  std::vector<Index> members(std::string_view group) const;
};

inline constexpr std::string_view kWholeBrainGroup = "whole_brain";

// --- story / split helpers -------------------------------------------------

/// Half-open [begin, end) row range of every story.
std::vector<std::pair<Index, Index>> story_ranges(std::span<const Index> offsets,
                                                  Index n_rows);

/// Story index of every row.
std::vector<Index> story_of_rows(std::span<const Index> offsets, Index n_rows);

/// Story offsets of the sub-matrix formed by `rows` (ascending), where a new
/// story starts whenever the source story changes.
std::vector<Index> subset_story_offsets(std::span<const Index> offsets,
                                        Index n_rows,
                                        std::span<const Index> rows);

struct SplitRows {
  std::vector<Index> train;
  std::vector<Index> test;
};
SplitRows split_rows(std::span<const Split> split);

/// Per-row split built from a per-story assignment.
std::vector<Split> expand_story_split(std::span<const Split> per_story,
                                      std::span<const Index> offsets,
                                      Index n_rows);

MatrixXd take_rows(const MatrixXd& m, std::span<const Index> rows);

}  // namespace residalign
