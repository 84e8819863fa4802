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

#include "residalign/io.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "residalign/error.hpp"
#include "residalign/npy.hpp"

namespace residalign::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp."
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << counter.fetch_add(1);
  fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ComputeError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ComputeError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path sidecar_path(const fs::path& npy_path) {
  fs::path p = npy_path;
  p.replace_extension(".meta.json");
  return p;
}

namespace {

json read_sidecar(const fs::path& npy_path) {
  fs::path meta = sidecar_path(npy_path);
  if (!fs::exists(meta)) {
    throw FormatError("missing metadata sidecar '" + meta.string() + "'");
  }
  try {
    return json::parse(read_file(meta));
  } catch (const json::exception& e) {
    throw FormatError("malformed sidecar '" + meta.string() + "': " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) {
    throw FormatError("sidecar '" + where.string() + "' lacks '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError("sidecar '" + where.string() + "' field '" + key + "': " + e.what());
  }
}

std::vector<Index> offsets_from(const json& j, const fs::path& where) {
  if (!j.contains("story_offsets")) return {0};
  return field<std::vector<Index>>(j, "story_offsets", where);
}

std::vector<Split> story_split_from(const json& j, const fs::path& where) {
  std::vector<Split> out;
  for (const auto& s : field<std::vector<std::string>>(j, "split", where)) {
    if (s == "train") {
      out.push_back(Split::train);
    } else if (s == "test") {
      out.push_back(Split::test);
    } else {
      throw FormatError("sidecar '" + where.string() + "': split entry '" + s +
                        "' is neither train nor test");
    }
  }
  return out;
}

fs::path onsets_file(const fs::path& npy_path) {
  fs::path p = npy_path;
  p.replace_extension(".onsets.npy");
  return p;
}

}  // namespace

FeatureMatrix load_feature_matrix(const fs::path& npy_path) {
  FeatureMatrix fm;
  fm.values = npy::read(npy_path);
  const json meta = read_sidecar(npy_path);
  const fs::path where = sidecar_path(npy_path);
  fm.name = meta.value("name", npy_path.stem().string());
  fm.story_offsets = offsets_from(meta, where);
  const auto kind = sampling_kind_from_string(meta.value("sampling", std::string("per_TR")));
  switch (kind) {
    case SamplingKind::per_tr:
      fm.sampling = Sampling::per_tr(meta.value("tr_seconds", kDefaultTrSeconds));
      break;
    case SamplingKind::frame_rate:
      fm.sampling = Sampling::frame_rate(field<double>(meta, "hz", where));
      break;
    case SamplingKind::irregular: {
      fs::path onsets = npy_path.parent_path() / field<std::string>(meta, "onsets_path", where);
      fm.sampling = Sampling::irregular(npy::read_vector(onsets));
      break;
    }
  }
  fm.validate();
  return fm;
}

void save_feature_matrix(const FeatureMatrix& fm, const fs::path& npy_path) {
  json meta;
  meta["kind"] = "feature";
  meta["name"] = fm.name;
  meta["sampling"] = std::string(to_string(fm.sampling.kind));
  meta["story_offsets"] = fm.story_offsets;
  switch (fm.sampling.kind) {
    case SamplingKind::per_tr:
      meta["tr_seconds"] = fm.sampling.tr_seconds;
      break;
    case SamplingKind::frame_rate:
      meta["hz"] = fm.sampling.hz;
      break;
    case SamplingKind::irregular: {
      fs::path onsets = onsets_file(npy_path);
      npy::write_vector(onsets, fm.sampling.onsets);
      meta["onsets_path"] = onsets.filename().string();
      break;
    }
  }
  npy::write(npy_path, fm.values);
  write_file_atomic(sidecar_path(npy_path), meta.dump(2) + "\n");
}

ResponseMatrix load_response_matrix(const fs::path& npy_path) {
  ResponseMatrix rm;
  rm.values = npy::read(npy_path);
  const json meta = read_sidecar(npy_path);
  const fs::path where = sidecar_path(npy_path);
  rm.subject_id = meta.value("subject_id", meta.value("name", npy_path.stem().string()));
  rm.modality = modality_from_string(field<std::string>(meta, "modality", where));
  rm.tr_seconds = meta.value("tr_seconds", kDefaultTrSeconds);
  rm.story_offsets = offsets_from(meta, where);
  auto per_story = story_split_from(meta, where);
  // Offsets are checked by validate(); guard the expansion against garbage.
  if (!rm.story_offsets.empty() && rm.story_offsets.back() < rm.n_trs()) {
    rm.split = expand_story_split(per_story, rm.story_offsets, rm.n_trs());
  }
  rm.validate();
  return rm;
}

void save_response_matrix(const ResponseMatrix& rm, const fs::path& npy_path) {
  json meta;
  meta["kind"] = "response";
  meta["name"] = rm.subject_id;
  meta["subject_id"] = rm.subject_id;
  meta["modality"] = std::string(to_string(rm.modality));
  meta["sampling"] = "per_TR";
  meta["tr_seconds"] = rm.tr_seconds;
  meta["story_offsets"] = rm.story_offsets;
  json split = json::array();
  for (auto [b, e] : story_ranges(rm.story_offsets, rm.n_trs())) {
    (void)e;
    split.push_back(rm.split.at(b) == Split::train ? "train" : "test");
  }
  meta["split"] = split;
  npy::write(npy_path, rm.values);
  write_file_atomic(sidecar_path(npy_path), meta.dump(2) + "\n");
}

MatrixHeader peek_matrix(const fs::path& npy_path) {
  MatrixHeader h;
  MatrixXd m = npy::read(npy_path);
  h.n_rows = m.rows();
  h.dim = m.cols();
  const json meta = read_sidecar(npy_path);
  h.story_offsets = offsets_from(meta, sidecar_path(npy_path));
  h.sampling = sampling_kind_from_string(meta.value("sampling", std::string("per_TR")));
  return h;
}

TimedAnnotation load_annotation(const fs::path& path, AnnotationKind kind) {
  TimedAnnotation a;
  a.kind = kind;
  a.story_id = path.stem().string();
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 3 tab-separated columns");
    }
    Token t;
    t.text = cols[0];
    try {
      std::size_t used = 0;
      t.onset = std::stod(cols[1], &used);
      if (used != cols[1].size()) throw std::invalid_argument("trailing");
      t.duration = std::stod(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      if (line_no == 1 && a.tokens.empty()) continue;  // header
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": onset/duration are not numbers");
    }
    a.tokens.push_back(std::move(t));
  }
  a.validate();
  return a;
}

void save_annotation(const TimedAnnotation& a, const fs::path& path) {
  std::ostringstream os;
  os.precision(17);
  os << "token\tonset_s\tduration_s\n";
  for (const auto& t : a.tokens) os << t.text << '\t' << t.onset << '\t' << t.duration << '\n';
  write_file_atomic(path, os.str());
}

RoiAtlas load_atlas(const fs::path& labels_csv, const fs::path& groups_json) {
  RoiAtlas atlas;
  std::istringstream in(read_file(labels_csv));
  std::string line;
  std::vector<std::pair<Index, std::string>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(labels_csv.string() + ":" + std::to_string(line_no) +
                        ": expected voxel_index,label");
    }
    std::string idx = line.substr(0, comma);
    Index v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(idx, &used);
      if (used != idx.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      if (line_no == 1) continue;  // header
      throw FormatError(labels_csv.string() + ":" + std::to_string(line_no) +
                        ": bad voxel index '" + idx + "'");
    }
    rows.emplace_back(v, line.substr(comma + 1));
  }
  atlas.voxel_labels.resize(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (auto& [v, label] : rows) {
    if (v < 0 || v >= static_cast<Index>(rows.size()) || seen[v]) {
      throw ValidationError(labels_csv.string() + ": voxel indices must be a permutation of 0.." +
                            std::to_string(rows.size() - 1));
    }
    seen[v] = true;
    atlas.voxel_labels[v] = std::move(label);
  }
  try {
    json groups = json::parse(read_file(groups_json));
    atlas.groups = groups.get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw FormatError("malformed ROI group map '" + groups_json.string() + "': " + e.what());
  }
  atlas.validate();
  return atlas;
}

void save_atlas(const RoiAtlas& atlas, const fs::path& labels_csv,
                const fs::path& groups_json) {
  std::ostringstream os;
  os << "voxel_index,label\n";
  for (std::size_t i = 0; i < atlas.voxel_labels.size(); ++i) {
    os << i << ',' << atlas.voxel_labels[i] << '\n';
  }
  write_file_atomic(labels_csv, os.str());
  write_file_atomic(groups_json, json(atlas.groups).dump(2) + "\n");
}

// --- WAV -----------------------------------------------------------------

namespace {

std::uint32_t le32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
std::uint16_t le16(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

void put32(std::string& s, std::uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put16(std::string& s, std::uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }

std::string wav_bytes(const Waveform& w, std::uint16_t format, std::uint16_t bits) {
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(w.rate));
  const std::uint16_t block = bits / 8;
  const auto data_len = static_cast<std::uint32_t>(w.samples.size() * block);
  std::string s;
  s += "RIFF";
  put32(s, 36 + data_len);
  s += "WAVEfmt ";
  put32(s, 16);
  put16(s, format);
  put16(s, 1);
  put32(s, rate);
  put32(s, rate * block);
  put16(s, block);
  put16(s, bits);
  s += "data";
  put32(s, data_len);
  for (double x : w.samples) {
    if (format == 1) {
      double c = std::clamp(x, -1.0, 1.0) * 32767.0;
      auto v = static_cast<std::int16_t>(std::lround(c));
      s.append(reinterpret_cast<const char*>(&v), 2);
    } else {
      auto f = static_cast<float>(x);
      s.append(reinterpret_cast<const char*>(&f), 4);
    }
  }
  return s;
}

}  // namespace

Waveform load_wav(const fs::path& path) {
  const std::string b = read_file(path);
  auto fail = [&](const std::string& why) {
    return FormatError(path.string() + ": " + why);
  };
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    std::string id = b.substr(pos, 4);
    std::size_t len = le32(b.data() + pos + 4);
    std::size_t body = pos + 8;
    if (body + len > b.size()) len = b.size() - body;
    if (id == "fmt ") {
      if (len < 16) throw fail("short fmt chunk");
      format = le16(b.data() + body);
      channels = le16(b.data() + body + 2);
      rate = le32(b.data() + body + 4);
      bits = le16(b.data() + body + 14);
      if (format == 0xFFFE && len >= 26) format = le16(b.data() + body + 24);
    } else if (id == "data") {
      data = b.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (!data || format == 0) throw fail("missing fmt or data chunk");
  if (channels != 1) throw fail("expected mono audio, got " + std::to_string(channels) + " channels");
  Waveform w;
  w.rate = rate;
  if (format == 1 && bits == 16) {
    w.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      auto v = static_cast<std::int16_t>(le16(data + 2 * i));
      w.samples[i] = v / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    w.samples.resize(data_len / 4);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      float f;
      std::memcpy(&f, data + 4 * i, 4);
      w.samples[i] = f;
    }
  } else {
    throw fail("unsupported sample format " + std::to_string(format) + "/" +
               std::to_string(bits) + " bits (need PCM16 or float32)");
  }
  return w;
}

void save_wav_pcm16(const Waveform& w, const fs::path& path) {
  write_file_atomic(path, wav_bytes(w, 1, 16));
}

void save_wav_float32(const Waveform& w, const fs::path& path) {
  write_file_atomic(path, wav_bytes(w, 3, 32));
}

}  // namespace residalign::io
