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
#include <span>
#include <string>
#include <vector>

#include "residalign/data_model.hpp"

namespace residalign {

struct Waveform {
  std::vector<double> samples;  // mono, nominal range [-1, 1]
  double rate = 16000.0;

  double duration() const { return rate > 0 ? static_cast<double>(samples.size()) / rate : 0.0; }
};

namespace io {

std::string read_file(const std::filesystem::path& path);
/// Write `bytes` to a sibling temporary file, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

/// `<dir>/<stem>.meta.json` for `<dir>/<stem>.npy`.
std::filesystem::path sidecar_path(const std::filesystem::path& npy_path);

// Array + sidecar convention. The sidecar carries name, sampling,
// tr_seconds | hz | onsets_path, story_offsets and, for responses,
// subject_id, modality and a per-story split list.
FeatureMatrix load_feature_matrix(const std::filesystem::path& npy_path);
void save_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& npy_path);

ResponseMatrix load_response_matrix(const std::filesystem::path& npy_path);
void save_response_matrix(const ResponseMatrix& rm, const std::filesystem::path& npy_path);

/// Shape and story offsets only, read without validating values.
struct MatrixHeader {
  Index n_rows = 0;
  Index dim = 0;
  std::vector<Index> story_offsets;
  SamplingKind sampling = SamplingKind::per_tr;
};
MatrixHeader peek_matrix(const std::filesystem::path& npy_path);

/// UTF-8 TSV `token<TAB>onset_s<TAB>duration_s`; an optional header line is
/// skipped. The story id is the file stem.
TimedAnnotation load_annotation(const std::filesystem::path& path, AnnotationKind kind);
void save_annotation(const TimedAnnotation& a, const std::filesystem::path& path);

/// CSV `voxel_index,label` plus a JSON object mapping group -> [labels].
RoiAtlas load_atlas(const std::filesystem::path& labels_csv,
                    const std::filesystem::path& groups_json);
void save_atlas(const RoiAtlas& atlas, const std::filesystem::path& labels_csv,
                const std::filesystem::path& groups_json);

/// RIFF/WAVE, mono, PCM16 or IEEE float32.
Waveform load_wav(const std::filesystem::path& path);
void save_wav_pcm16(const Waveform& w, const std::filesystem::path& path);
void save_wav_float32(const Waveform& w, const std::filesystem::path& path);

}  // namespace io
}  // namespace residalign
