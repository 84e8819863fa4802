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

#include "residalign/stimulus_features.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "residalign/error.hpp"

namespace residalign {

namespace {

// Articulation columns: consonant place, manner, voicing, vowel quality.
const std::vector<std::string> kArticulationNames = {
    "bilabial", "labiodental", "dental",  "alveolar", "postalveolar", "palatal",
    "velar",    "glottal",     "stop",    "fricative", "affricate",   "nasal",
    "liquid",   "glide",       "voiced",  "high",      "mid",         "low",
    "front",    "central",     "back",    "rounded"};

const std::vector<std::pair<std::string, std::vector<std::string>>> kArpabet = {
    {"AA", {"voiced", "low", "back"}},
    {"AE", {"voiced", "low", "front"}},
    {"AH", {"voiced", "mid", "central"}},
    {"AO", {"voiced", "mid", "back", "rounded"}},
    {"AW", {"voiced", "low", "central", "rounded"}},
    {"AY", {"voiced", "low", "central"}},
    {"B", {"bilabial", "stop", "voiced"}},
    {"CH", {"postalveolar", "affricate"}},
    {"D", {"alveolar", "stop", "voiced"}},
    {"DH", {"dental", "fricative", "voiced"}},
    {"EH", {"voiced", "mid", "front"}},
    {"ER", {"voiced", "mid", "central"}},
    {"EY", {"voiced", "mid", "front"}},
    {"F", {"labiodental", "fricative"}},
    {"G", {"velar", "stop", "voiced"}},
    {"HH", {"glottal", "fricative"}},
    {"IH", {"voiced", "high", "front"}},
    {"IY", {"voiced", "high", "front"}},
    {"JH", {"postalveolar", "affricate", "voiced"}},
    {"K", {"velar", "stop"}},
    {"L", {"alveolar", "liquid", "voiced"}},
    {"M", {"bilabial", "nasal", "voiced"}},
    {"N", {"alveolar", "nasal", "voiced"}},
    {"NG", {"velar", "nasal", "voiced"}},
    {"OW", {"voiced", "mid", "back", "rounded"}},
    {"OY", {"voiced", "mid", "back", "rounded"}},
    {"P", {"bilabial", "stop"}},
    {"R", {"postalveolar", "liquid", "voiced"}},
    {"S", {"alveolar", "fricative"}},
    {"SH", {"postalveolar", "fricative"}},
    {"T", {"alveolar", "stop"}},
    {"TH", {"dental", "fricative"}},
    {"UH", {"voiced", "high", "back", "rounded"}},
    {"UW", {"voiced", "high", "back", "rounded"}},
    {"V", {"labiodental", "fricative", "voiced"}},
    {"W", {"bilabial", "velar", "glide", "voiced", "rounded"}},
    {"Y", {"palatal", "glide", "voiced"}},
    {"Z", {"alveolar", "fricative", "voiced"}},
    {"ZH", {"postalveolar", "fricative", "voiced"}},
};

const std::set<std::string> kSkipWords = {"",     "sp",   "sil",  "{sp}", "{sl}", "{lg}",
                                          "{br}", "{ls}", "{ns}", "{cg}", "{ig}"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// ASCII letters plus every non-ASCII code point.
Index count_letters(std::string_view word) {
  Index n = 0;
  for (unsigned char c : word) {
    if (c < 0x80) {
      n += std::isalpha(c) ? 1 : 0;
    } else if ((c & 0xC0) != 0x80) {
      ++n;
    }
  }
  return n;
}

void check_story_count(std::size_t n, const TrGrid& grid, const char* what) {
  if (n != grid.story_trs.size()) {
    throw ValidationError(std::string(what) + ": " + std::to_string(n) +
                          " stories supplied, TR grid has " +
                          std::to_string(grid.story_trs.size()));
  }
}

FeatureMatrix per_tr_matrix(std::string name, const TrGrid& grid, Index dim) {
  FeatureMatrix fm;
  fm.name = std::move(name);
  fm.sampling = Sampling::per_tr(grid.tr_seconds);
  fm.story_offsets = grid.offsets();
  fm.values = MatrixXd::Zero(grid.total(), dim);
  return fm;
}

}  // namespace

// --- inventory -------------------------------------------------------------

PhonemeInventory PhonemeInventory::arpabet() {
  PhonemeInventory inv;
  inv.articulation_names = kArticulationNames;
  inv.articulation = MatrixXd::Zero(static_cast<Index>(kArpabet.size()), kArticulationDims);
  for (std::size_t i = 0; i < kArpabet.size(); ++i) {
    inv.monophones.push_back(kArpabet[i].first);
    for (const auto& feat : kArpabet[i].second) {
      auto it = std::find(kArticulationNames.begin(), kArticulationNames.end(), feat);
      inv.articulation(static_cast<Index>(i), it - kArticulationNames.begin()) = 1.0;
    }
  }
  inv.skip_labels = {"SP", "SIL", "SPN", ""};
  return inv;
}

std::string PhonemeInventory::normalize(std::string_view label) {
  std::string out;
  for (unsigned char c : label) {
    if (!std::isspace(c)) out.push_back(static_cast<char>(std::toupper(c)));
  }
  while (!out.empty() && std::isdigit(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

bool PhonemeInventory::is_skip(std::string_view label) const {
  const auto n = normalize(label);
  return std::find(skip_labels.begin(), skip_labels.end(), n) != skip_labels.end();
}

Index PhonemeInventory::monophone_index(std::string_view label) const {
  const auto n = normalize(label);
  auto it = std::find(monophones.begin(), monophones.end(), n);
  if (it == monophones.end()) {
    throw ValidationError("unknown phoneme label '" + std::string(label) + "'");
  }
  return it - monophones.begin();
}

void PhonemeInventory::validate() const {
  if (static_cast<int>(monophones.size()) != kMonophoneCount) {
    throw ValidationError("phoneme inventory needs " + std::to_string(kMonophoneCount) +
                          " monophones, has " + std::to_string(monophones.size()));
  }
  if (std::set<std::string>(monophones.begin(), monophones.end()).size() != monophones.size()) {
    throw ValidationError("phoneme inventory has duplicate monophones");
  }
  if (articulation.rows() != kMonophoneCount || articulation.cols() != kArticulationDims) {
    throw ValidationError("articulation map must be 39 x 22");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& d : diphones) {
    monophone_index(d.first);
    monophone_index(d.second);
    if (!seen.insert(d).second) {
      throw ValidationError("duplicate diphone " + d.first + "-" + d.second);
    }
  }
}

PhonemeInventory PhonemeInventory::load(const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("malformed phoneme inventory '" + path.string() + "': " + e.what());
  }
  PhonemeInventory inv = arpabet();
  try {
    if (j.contains("monophones")) {
      inv.monophones.clear();
      for (const auto& m : j.at("monophones")) inv.monophones.push_back(normalize(m.get<std::string>()));
    }
    if (j.contains("articulation")) {
      const auto& a = j.at("articulation");
      if (a.contains("features")) inv.articulation_names = a.at("features").get<std::vector<std::string>>();
      inv.articulation = MatrixXd::Zero(static_cast<Index>(inv.monophones.size()),
                                        static_cast<Index>(inv.articulation_names.size()));
      for (const auto& [phone, row] : a.at("map").items()) {
        auto vec = row.get<std::vector<double>>();
        if (static_cast<Index>(vec.size()) != inv.articulation.cols()) {
          throw ValidationError("articulation row for '" + phone + "' has " +
                                std::to_string(vec.size()) + " entries");
        }
        Index r = inv.monophone_index(phone);
        for (std::size_t c = 0; c < vec.size(); ++c) inv.articulation(r, static_cast<Index>(c)) = vec[c];
      }
    }
    if (j.contains("diphones")) {
      inv.diphones.clear();
      for (const auto& d : j.at("diphones")) {
        auto pair = d.get<std::vector<std::string>>();
        if (pair.size() != 2) throw FormatError("diphone entries must be [first, second]");
        inv.diphones.emplace_back(normalize(pair[0]), normalize(pair[1]));
      }
    }
    if (j.contains("skip_labels")) {
      inv.skip_labels.clear();
      for (const auto& s : j.at("skip_labels")) inv.skip_labels.push_back(normalize(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw FormatError("phoneme inventory '" + path.string() + "': " + e.what());
  }
  inv.validate();
  return inv;
}

void PhonemeInventory::save(const std::filesystem::path& path) const {
  using nlohmann::json;
  json map = json::object();
  for (std::size_t i = 0; i < monophones.size(); ++i) {
    std::vector<double> row(articulation.cols());
    for (Index c = 0; c < articulation.cols(); ++c) row[c] = articulation(static_cast<Index>(i), c);
    map[monophones[i]] = row;
  }
  json di = json::array();
  for (const auto& [a, b] : diphones) di.push_back({a, b});
  json j{{"monophones", monophones},
         {"articulation", {{"features", articulation_names}, {"map", map}}},
         {"diphones", di},
         {"skip_labels", skip_labels}};
  io::write_file_atomic(path, j.dump(1) + "\n");
}

void PhonemeInventory::derive_diphones(std::span<const TimedAnnotation> phones) {
  std::set<std::pair<Index, Index>> pairs;
  for (const auto& story : phones) {
    Index prev = -1;
    for (const auto& t : story.tokens) {
      if (is_skip(t.text)) {
        prev = -1;
        continue;
      }
      Index cur = monophone_index(t.text);
      if (prev >= 0) pairs.emplace(prev, cur);
      prev = cur;
    }
  }
  diphones.clear();
  for (auto [a, b] : pairs) diphones.emplace_back(monophones[a], monophones[b]);
}

// --- annotation features ---------------------------------------------------

FeatureMatrix textual_features(std::span<const TimedAnnotation> words, const TrGrid& grid) {
  check_story_count(words.size(), grid, "textual_features");
  FeatureMatrix fm = per_tr_matrix("textual", grid, 3);
  const auto offsets = grid.offsets();
  for (std::size_t s = 0; s < words.size(); ++s) {
    std::vector<std::vector<double>> lengths(static_cast<std::size_t>(grid.story_trs[s]));
    for (const auto& t : words[s].tokens) {
      if (kSkipWords.count(lower(t.text))) continue;
      const Index letters = count_letters(t.text);
      if (letters == 0) continue;
      const Index k = grid.bin(s, t.onset);
      if (k < 0) continue;
      lengths[k].push_back(static_cast<double>(letters));
    }
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      const auto& l = lengths[k];
      const Index row = offsets[s] + static_cast<Index>(k);
      double sum = 0.0;
      for (double x : l) sum += x;
      double std = 0.0;
      if (l.size() >= 2) {
        const double mu = sum / static_cast<double>(l.size());
        double ss = 0.0;
        for (double x : l) ss += (x - mu) * (x - mu);
        std = std::sqrt(ss / static_cast<double>(l.size()));
      }
      fm.values(row, 0) = sum;
      fm.values(row, 1) = static_cast<double>(l.size());
      fm.values(row, 2) = std;
    }
  }
  return fm;
}

PhonemeFeatureSet phoneme_features(std::span<const TimedAnnotation> phones,
                                   const PhonemeInventory& inv, const TrGrid& grid,
                                   bool monophone_presence) {
  check_story_count(phones.size(), grid, "phoneme_features");
  const auto n_mono = static_cast<Index>(inv.monophones.size());
  std::map<std::pair<Index, Index>, Index> diphone_index;
  for (std::size_t i = 0; i < inv.diphones.size(); ++i) {
    diphone_index[{inv.monophone_index(inv.diphones[i].first),
                   inv.monophone_index(inv.diphones[i].second)}] = static_cast<Index>(i);
  }
  PhonemeFeatureSet out;
  out.num_phonemes = per_tr_matrix("num_phonemes", grid, 1);
  out.monophone = per_tr_matrix("monophones", grid, n_mono);
  out.diphone = per_tr_matrix("diphones", grid, static_cast<Index>(inv.diphones.size()));
  out.articulation = per_tr_matrix("articulation", grid, inv.articulation.cols());
  const auto offsets = grid.offsets();
  for (std::size_t s = 0; s < phones.size(); ++s) {
    Index prev = -1;
    for (const auto& t : phones[s].tokens) {
      if (inv.is_skip(t.text)) {
        prev = -1;
        continue;
      }
      const Index idx = inv.monophone_index(t.text);
      const Index k = grid.bin(s, t.onset);
      if (k >= 0) {
        const Index row = offsets[s] + k;
        out.num_phonemes.values(row, 0) += 1.0;
        if (monophone_presence) {
          out.monophone.values(row, idx) = 1.0;
        } else {
          out.monophone.values(row, idx) += 1.0;
        }
        out.articulation.values.row(row) += inv.articulation.row(idx);
        if (prev >= 0) {
          auto it = diphone_index.find({prev, idx});
          if (it != diphone_index.end()) {
            out.diphone.values(row, it->second) = 1.0;
          } else {
            ++out.pairs_outside_inventory;
          }
        }
      }
      prev = idx;
    }
  }
  return out;
}

// --- audio -----------------------------------------------------------------

AudioFeatureSet audio_dsp(std::span<const Waveform> audio, const DspParams& params,
                          const TrGrid& grid) {
  check_story_count(audio.size(), grid, "audio_dsp");
  AudioFeatureSet out;
  out.fbank = per_tr_matrix("fbank", grid, params.n_fbank);
  out.mel = per_tr_matrix("mel", grid, params.n_mel);
  out.mfcc = per_tr_matrix("mfcc", grid, params.n_mfcc);
  out.powspec = per_tr_matrix("powspec", grid, params.powspec_bands);
  const auto offsets = grid.offsets();
  for (std::size_t s = 0; s < audio.size(); ++s) {
    const Waveform& w = audio[s];
    const Index n_trs = grid.story_trs[s];
    if (n_trs == 0) continue;
    if (w.samples.empty()) throw ComputeError("audio_dsp: empty audio for story " + std::to_string(s));
    const double needed = static_cast<double>(n_trs - 1) * grid.tr_seconds;
    if (w.duration() < needed) {
      throw ValidationError("audio_dsp: story " + std::to_string(s) + " audio lasts " +
                            std::to_string(w.duration()) + " s but the TR grid needs " +
                            std::to_string(needed) + " s");
    }
    const FrameFeatures frames = frame_features(w, params);
    const auto centres = grid.centres(s);
    const double cutoff = 0.5 / grid.tr_seconds;
    out.fbank.values.middleRows(offsets[s], n_trs) =
        lanczos_downsample(frames.fbank, frames.frame_times, centres, 3, cutoff);
    out.mel.values.middleRows(offsets[s], n_trs) =
        lanczos_downsample(frames.mel, frames.frame_times, centres, 3, cutoff);
    out.mfcc.values.middleRows(offsets[s], n_trs) =
        lanczos_downsample(frames.mfcc, frames.frame_times, centres, 3, cutoff);

    int above = 0;
    const auto n = static_cast<Index>(w.samples.size());
    for (Index k = 0; k < n_trs; ++k) {
      const auto a = static_cast<Index>(std::llround(static_cast<double>(k) * grid.tr_seconds * w.rate));
      const auto b = std::min<Index>(
          n, static_cast<Index>(std::llround(static_cast<double>(k + 1) * grid.tr_seconds * w.rate)));
      if (b <= a) {
        out.flags.push_back("story " + std::to_string(s) + " TR " + std::to_string(k) +
                            ": no audio for powspec, left at zero");
        continue;
      }
      auto bp = band_power(std::span<const double>(w.samples).subspan(a, b - a), w.rate, params);
      out.powspec.values.row(offsets[s] + k) = bp.power.transpose();
      above = bp.bands_above_nyquist;
    }
    if (above > 0) {
      out.flags.push_back("story " + std::to_string(s) + ": sample rate " +
                          std::to_string(w.rate) + " Hz leaves " + std::to_string(above) +
                          " powspec bands above Nyquist (zeroed)");
    }
  }
  return out;
}

// --- phonological functionals ----------------------------------------------

FunctionalsResult phonological_functionals(const FeatureMatrix& frames, const TrGrid& grid) {
  if (frames.dim() != kPhonologicalDescriptors) {
    throw ValidationError("phonological frames must have " +
                          std::to_string(kPhonologicalDescriptors) + " descriptors, got " +
                          std::to_string(frames.dim()));
  }
  if (frames.sampling.kind != SamplingKind::frame_rate) {
    throw ValidationError("phonological frames must use frame_rate sampling");
  }
  const auto ranges = story_ranges(frames.story_offsets, frames.n_rows());
  check_story_count(ranges.size(), grid, "phonological_functionals");
  FunctionalsResult out;
  out.values = per_tr_matrix("phonological", grid,
                             kPhonologicalDescriptors * kPhonologicalFunctionals);
  const auto offsets = grid.offsets();
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(grid.story_trs[s]));
    for (Index i = ranges[s].first; i < ranges[s].second; ++i) {
      const double t = static_cast<double>(i - ranges[s].first) / frames.sampling.hz;
      const Index k = grid.bin(s, t);
      if (k >= 0) members[k].push_back(i);
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Index row = offsets[s] + static_cast<Index>(k);
      if (members[k].empty()) {
        out.empty_trs.push_back(row);
        continue;
      }
      const double n = static_cast<double>(members[k].size());
      for (Index d = 0; d < kPhonologicalDescriptors; ++d) {
        double sum = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Index i : members[k]) {
          const double x = frames.values(i, d);
          sum += x;
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        const double mu = sum / n;
        double m2 = 0, m3 = 0, m4 = 0;
        for (Index i : members[k]) {
          const double dx = frames.values(i, d) - mu;
          m2 += dx * dx;
          m3 += dx * dx * dx;
          m4 += dx * dx * dx * dx;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const double sd = std::sqrt(m2);
        double skew = 0, kurt = 0;
        if (sd > 1e-12 * (1.0 + std::abs(mu))) {
          skew = m3 / (m2 * sd);
          kurt = m4 / (m2 * m2) - 3.0;
        }
        const Index c = d * kPhonologicalFunctionals;
        out.values.values(row, c + 0) = mu;
        out.values.values(row, c + 1) = sd;
        out.values.values(row, c + 2) = skew;
        out.values.values(row, c + 3) = kurt;
        out.values.values(row, c + 4) = hi;
        out.values.values(row, c + 5) = lo;
      }
    }
  }
  return out;
}

// --- precomputed -----------------------------------------------------------

Index precomputed_dim(std::string_view name) {
  if (name == "motion_energy") return 39;
  if (name == "powspec_ref") return 448;
  if (name == "articulation_ref") return kArticulationDims;
  if (name == "phonological_frames") return kPhonologicalDescriptors;
  throw ConfigError("unknown precomputed feature '" + std::string(name) + "'");
}

FeatureMatrix ingest_precomputed(std::string_view name, const std::filesystem::path& path) {
  const Index dim = precomputed_dim(name);
  FeatureMatrix fm = io::load_feature_matrix(path);
  if (fm.dim() != dim) {
    throw ValidationError("precomputed '" + std::string(name) + "' must have dim " +
                          std::to_string(dim) + ", file '" + path.string() + "' has " +
                          std::to_string(fm.dim()));
  }
  return fm;
}

std::vector<FeatureMatrix> split_columns(const FeatureMatrix& fm,
                                         std::span<const std::string> names) {
  if (static_cast<Index>(names.size()) != fm.dim()) {
    throw ValidationError("split_columns: " + std::to_string(names.size()) + " names for " +
                          std::to_string(fm.dim()) + " columns");
  }
  std::vector<FeatureMatrix> out;
  for (Index c = 0; c < fm.dim(); ++c) {
    FeatureMatrix col;
    col.name = names[c];
    col.sampling = fm.sampling;
    col.story_offsets = fm.story_offsets;
    col.values = fm.values.col(c);
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace residalign
