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

#include "residalign/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "residalign/error.hpp"

namespace residalign {

Sampling Sampling::per_tr(double tr_seconds) {
  Sampling s;
  s.kind = SamplingKind::per_tr;
  s.tr_seconds = tr_seconds;
  return s;
}

Sampling Sampling::frame_rate(double hz) {
  Sampling s;
  s.kind = SamplingKind::frame_rate;
  s.hz = hz;
  return s;
}

Sampling Sampling::irregular(std::vector<double> onsets) {
  Sampling s;
  s.kind = SamplingKind::irregular;
  s.onsets = std::move(onsets);
  return s;
}

std::string_view to_string(SamplingKind kind) {
  switch (kind) {
    case SamplingKind::per_tr: return "per_TR";
    case SamplingKind::frame_rate: return "frame_rate";
    case SamplingKind::irregular: return "irregular";
  }
  return "per_TR";
}

SamplingKind sampling_kind_from_string(std::string_view s) {
  if (s == "per_TR" || s == "per_tr") return SamplingKind::per_tr;
  if (s == "frame_rate") return SamplingKind::frame_rate;
  if (s == "irregular") return SamplingKind::irregular;
  throw FormatError("unknown sampling '" + std::string(s) + "'");
}

std::string_view to_string(Modality m) {
  return m == Modality::reading ? "reading" : "listening";
}

Modality modality_from_string(std::string_view s) {
  if (s == "reading") return Modality::reading;
  if (s == "listening") return Modality::listening;
  throw FormatError("unknown modality '" + std::string(s) + "'");
}

namespace {

void check_offsets(const std::vector<Index>& offsets, Index n_rows,
                   const std::string& what) {
  if (offsets.empty() || offsets.front() != 0) {
    throw ValidationError(what + ": story_offsets must start at 0");
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (offsets[i] <= offsets[i - 1]) {
      throw ValidationError(what + ": story_offsets must be strictly ascending");
    }
  }
  if (n_rows > 0 && offsets.back() >= n_rows) {
    throw ValidationError(what + ": story offset " +
                          std::to_string(offsets.back()) + " is not < n_rows " +
                          std::to_string(n_rows));
  }
}

void check_finite(const MatrixXd& m, const std::string& what) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        std::ostringstream os;
        os << what << ": non-finite value at row " << r << ", col " << c;
        throw ValidationError(os.str());
      }
    }
  }
}

}  // namespace

void FeatureMatrix::validate() const {
  const std::string what = "feature matrix '" + name + "'";
  check_finite(values, what);
  check_offsets(story_offsets, n_rows(), what);
  switch (sampling.kind) {
    case SamplingKind::per_tr:
      if (!(sampling.tr_seconds > 0)) {
        throw ValidationError(what + ": tr_seconds must be positive");
      }
      break;
    case SamplingKind::frame_rate:
      if (!(sampling.hz > 0)) throw ValidationError(what + ": hz must be positive");
      break;
    case SamplingKind::irregular: {
      if (static_cast<Index>(sampling.onsets.size()) != n_rows()) {
        throw ValidationError(what + ": onset list length " +
                              std::to_string(sampling.onsets.size()) +
                              " != n_rows " + std::to_string(n_rows()));
      }
      for (auto [b, e] : story_ranges(story_offsets, n_rows())) {
        for (Index i = b; i < e; ++i) {
          if (!std::isfinite(sampling.onsets[i])) {
            throw ValidationError(what + ": non-finite onset at row " +
                                  std::to_string(i));
          }
          if (i > b && sampling.onsets[i] < sampling.onsets[i - 1]) {
            throw ValidationError(what + ": onsets decrease at row " +
                                  std::to_string(i));
          }
        }
      }
      break;
    }
  }
}

void ResponseMatrix::validate() const {
  const std::string what = "response matrix '" + subject_id + "'";
  check_finite(values, what);
  check_offsets(story_offsets, n_trs(), what);
  if (static_cast<Index>(split.size()) != n_trs()) {
    throw ValidationError(what + ": split has " + std::to_string(split.size()) +
                          " entries for " + std::to_string(n_trs()) + " TRs");
  }
  for (auto [b, e] : story_ranges(story_offsets, n_trs())) {
    for (Index i = b + 1; i < e; ++i) {
      if (split[i] != split[b]) {
        throw ValidationError(what + ": story starting at row " +
                              std::to_string(b) + " mixes train and test rows");
      }
    }
  }
  if (!(tr_seconds > 0)) throw ValidationError(what + ": tr_seconds must be positive");
}

void TimedAnnotation::validate() const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (!std::isfinite(t.onset) || !std::isfinite(t.duration)) {
      throw ValidationError("annotation '" + story_id + "': non-finite time at token " +
                            std::to_string(i));
    }
    if (t.duration < 0) {
      throw ValidationError("annotation '" + story_id + "': negative duration at token " +
                            std::to_string(i));
    }
    if (i > 0 && t.onset < tokens[i - 1].onset) {
      throw ValidationError("annotation '" + story_id + "': onsets decrease at token " +
                            std::to_string(i));
    }
  }
}

void RoiAtlas::validate() const {
  std::set<std::string> present(voxel_labels.begin(), voxel_labels.end());
  for (const auto& [group, labels] : groups) {
    for (const auto& l : labels) {
      if (!present.count(l)) {
        throw ValidationError("ROI group '" + group + "' references label '" + l +
                              "' that no voxel carries");
      }
    }
  }
}

std::vector<Index> RoiAtlas::members(std::string_view group) const {
  std::vector<Index> out;
  if (group == kWholeBrainGroup) {
    out.resize(voxel_labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Index>(i);
    return out;
  }
  auto it = groups.find(std::string(group));
  if (it == groups.end()) {
    throw ConfigError("unknown ROI group '" + std::string(group) + "'");
  }
  std::set<std::string> labels(it->second.begin(), it->second.end());
  for (std::size_t i = 0; i < voxel_labels.size(); ++i) {
    if (labels.count(voxel_labels[i])) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<std::pair<Index, Index>> story_ranges(std::span<const Index> offsets,
                                                  Index n_rows) {
  std::vector<std::pair<Index, Index>> out;
  if (offsets.empty()) {
    if (n_rows > 0) out.emplace_back(0, n_rows);
    return out;
  }
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    Index end = i + 1 < offsets.size() ? offsets[i + 1] : n_rows;
    out.emplace_back(offsets[i], end);
  }
  return out;
}

std::vector<Index> story_of_rows(std::span<const Index> offsets, Index n_rows) {
  std::vector<Index> out(static_cast<std::size_t>(n_rows), 0);
  Index k = 0;
  for (auto [b, e] : story_ranges(offsets, n_rows)) {
    for (Index i = b; i < e; ++i) out[i] = k;
    ++k;
  }
  return out;
}

std::vector<Index> subset_story_offsets(std::span<const Index> offsets,
                                        Index n_rows,
                                        std::span<const Index> rows) {
  auto story = story_of_rows(offsets, n_rows);
  std::vector<Index> out;
  Index prev_story = -1;
  Index prev_row = -2;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index s = story[rows[i]];
    // A gap inside one story also starts a new segment.
    if (s != prev_story || rows[i] != prev_row + 1) out.push_back(static_cast<Index>(i));
    prev_story = s;
    prev_row = rows[i];
  }
  if (out.empty()) out.push_back(0);
  return out;
}

SplitRows split_rows(std::span<const Split> split) {
  SplitRows out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    (split[i] == Split::train ? out.train : out.test).push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Split> expand_story_split(std::span<const Split> per_story,
                                      std::span<const Index> offsets,
                                      Index n_rows) {
  auto ranges = story_ranges(offsets, n_rows);
  if (per_story.size() != ranges.size()) {
    throw ValidationError("split lists " + std::to_string(per_story.size()) +
                          " stories but there are " + std::to_string(ranges.size()));
  }
  std::vector<Split> out(static_cast<std::size_t>(n_rows));
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    for (Index i = ranges[k].first; i < ranges[k].second; ++i) out[i] = per_story[k];
  }
  return out;
}

MatrixXd take_rows(const MatrixXd& m, std::span<const Index> rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace residalign
