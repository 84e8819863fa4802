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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "residalign/data_model.hpp"
#include "residalign/dsp.hpp"
#include "residalign/io.hpp"
#include "residalign/temporal.hpp"

namespace residalign {

inline constexpr int kMonophoneCount = 39;
inline constexpr int kArticulationDims = 22;
inline constexpr int kReferenceDiphoneCount = 858;
inline constexpr int kPhonologicalDescriptors = 18;
inline constexpr int kPhonologicalFunctionals = 6;

/// Monophone labels, the diphone list and the phoneme -> articulation map.
struct PhonemeInventory {
  std::vector<std::string> monophones;
  std::vector<std::pair<std::string, std::string>> diphones;
  std::vector<std::string> articulation_names;
  MatrixXd articulation;  // monophones.size() x kArticulationDims, 0/1
  std::vector<std::string> skip_labels;  // silence markers, break adjacency

  /// The 39 ARPAbet phonemes with a place/manner/voicing/vowel-quality
  /// articulation map. The diphone list is empty; see derive_diphones.
  static PhonemeInventory arpabet();
  static PhonemeInventory load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void validate() const;

  /// Upper-cased with ARPAbet stress digits removed.
  static std::string normalize(std::string_view label);
  bool is_skip(std::string_view label) const;
  /// Index into monophones; throws ValidationError naming unknown labels.
  Index monophone_index(std::string_view label) const;

  /// Replace the diphone list with every adjacent pair observed in `phones`,
  /// sorted by monophone order.
  void derive_diphones(std::span<const TimedAnnotation> phones);
};

/// num_letters, num_words and word_length_std (population) per TR, by word
/// onset. One annotation per story, in grid order.
FeatureMatrix textual_features(std::span<const TimedAnnotation> words, const TrGrid& grid);

struct PhonemeFeatureSet {
  FeatureMatrix num_phonemes;  // dim 1
  FeatureMatrix monophone;     // dim 39
  FeatureMatrix diphone;       // dim = inventory diphone count, 0/1
  FeatureMatrix articulation;  // dim 22
  Index pairs_outside_inventory = 0;
};

/// A diphone belongs to the TR of its second phone.
PhonemeFeatureSet phoneme_features(std::span<const TimedAnnotation> phones,
                                   const PhonemeInventory& inv, const TrGrid& grid,
                                   bool monophone_presence = false);

struct AudioFeatureSet {
  FeatureMatrix fbank;    // 26
  FeatureMatrix mel;      // 80
  FeatureMatrix mfcc;     // 13
  FeatureMatrix powspec;  // 448
  std::vector<std::string> flags;
};

/// Frame-level FBank/Mel/MFCC Lanczos-resampled to TR centres, and Welch band
/// power over each TR's audio segment. One waveform per story.
AudioFeatureSet audio_dsp(std::span<const Waveform> audio, const DspParams& params,
                          const TrGrid& grid);

struct FunctionalsResult {
  FeatureMatrix values;            // dim 108, descriptor-major
  std::vector<Index> empty_trs;    // TRs without frames (left at zero)
};

/// mean, std, skewness, excess kurtosis, max, min of every descriptor over
/// the frames inside each TR. Skewness and kurtosis are 0 at zero variance.
FunctionalsResult phonological_functionals(const FeatureMatrix& frames, const TrGrid& grid);

/// Declared dimension of an ingestible precomputed matrix.
Index precomputed_dim(std::string_view name);

/// Load and validate motion_energy (39), powspec_ref (448), articulation_ref
/// (22) or phonological_frames (18).
FeatureMatrix ingest_precomputed(std::string_view name, const std::filesystem::path& path);

/// One dim-1 FeatureMatrix per column, named by `names`.
std::vector<FeatureMatrix> split_columns(const FeatureMatrix& fm,
                                         std::span<const std::string> names);

}  // namespace residalign
