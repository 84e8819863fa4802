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

#include "residalign/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "residalign/error.hpp"
#include "residalign/io.hpp"
#include "residalign/rng.hpp"
#include "residalign/stimulus_features.hpp"

namespace residalign {

namespace fs = std::filesystem;
using nlohmann::json;

RemovalMode removal_mode_from_string(std::string_view s) {
  if (s == "single") return RemovalMode::single;
  if (s == "joint") return RemovalMode::joint;
  if (s == "both") return RemovalMode::both;
  throw ConfigError("unknown removal_mode '" + std::string(s) +
                    "' (expected single, joint or both)");
}

bool InputSpec::used_for(Modality m) const {
  return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

std::vector<std::string> computable_features(const StimuliSpec& s) {
  auto all = [&](auto member) {
    return !s.stories.empty() &&
           std::all_of(s.stories.begin(), s.stories.end(),
                       [&](const StorySpec& st) { return !(st.*member).empty(); });
  };
  std::vector<std::string> out;
  if (all(&StorySpec::words)) {
    out.insert(out.end(), {"num_letters", "num_words", "word_length_std", "textual"});
  }
  if (all(&StorySpec::phonemes)) {
    out.insert(out.end(), {"num_phonemes", "monophones", "diphones", "articulation"});
  }
  if (all(&StorySpec::audio)) out.insert(out.end(), {"fbank", "mel", "mfcc", "powspec"});
  for (const auto& p : s.precomputed) {
    out.push_back(p.name == "phonological_frames" ? "phonological" : p.name);
  }
  return out;
}

std::vector<Modality> ExperimentConfig::modalities() const {
  std::vector<Modality> out;
  for (Modality m : {Modality::reading, Modality::listening}) {
    if (!subjects_of(m).empty()) out.push_back(m);
  }
  return out;
}

std::vector<const SubjectSpec*> ExperimentConfig::subjects_of(Modality m) const {
  std::vector<const SubjectSpec*> out;
  for (const auto& s : subjects) {
    if (s.modality == m) out.push_back(&s);
  }
  return out;
}

const InputSpec* ExperimentConfig::feature(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<Modality> parse_modalities(const json& j, const std::string& where) {
  std::vector<Modality> out;
  try {
    for (const auto& m : j) out.push_back(modality_from_string(m.get<std::string>()));
  } catch (const json::exception& e) {
    throw ConfigError(where + ".modalities: " + e.what());
  } catch (const Error& e) {
    throw ConfigError(where + ".modalities: " + e.what());
  }
  if (out.empty()) throw ConfigError(where + ".modalities must not be empty");
  return out;
}

std::vector<InputSpec> parse_inputs(const json& arr, const fs::path& base, const std::string& where) {
  std::vector<InputSpec> out;
  if (!arr.is_array()) throw ConfigError(where + " must be an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    check_keys(arr[i], {"name", "path", "computed", "modalities"}, w);
    InputSpec in;
    in.name = get<std::string>(arr[i], "name", "", w);
    if (in.name.empty()) throw ConfigError(w + " needs a name");
    if (!names.insert(in.name).second) throw ConfigError(w + ": duplicate name '" + in.name + "'");
    in.path = resolve(base, get<std::string>(arr[i], "path", "", w));
    in.computed = get<std::string>(arr[i], "computed", "", w);
    if (in.path.empty() == in.computed.empty()) {
      throw ConfigError(w + " needs exactly one of 'path' or 'computed'");
    }
    if (arr[i].contains("modalities")) in.modalities = parse_modalities(arr[i]["modalities"], w);
    out.push_back(std::move(in));
  }
  return out;
}

std::vector<double> parse_grid(const json& j) {
  std::vector<double> grid;
  if (j.is_array()) {
    try {
      grid = j.get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("lambda_grid: ") + e.what());
    }
  } else if (j.is_object()) {
    check_keys(j, {"min", "max", "n"}, "lambda_grid");
    const double lo = get<double>(j, "min", 10.0, "lambda_grid");
    const double hi = get<double>(j, "max", 1000.0, "lambda_grid");
    const int n = get<int>(j, "n", 10, "lambda_grid");
    if (!(lo > 0) || !(hi >= lo) || n < 1) throw ConfigError("lambda_grid: need 0 < min <= max, n >= 1");
    grid = log_grid(lo, hi, n);
  } else {
    throw ConfigError("lambda_grid must be an array or {min, max, n}");
  }
  if (grid.empty()) throw ConfigError("lambda_grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) throw ConfigError("lambda_grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("lambda_grid must be strictly ascending");
  }
  return grid;
}

SynthSpec parse_synth(const json& j, std::uint64_t rng_seed) {
  const std::string w = "synth";
  check_keys(j, {"n_subjects", "n_trs", "n_voxels", "n_stories", "n_test_stories", "rep_dim",
                 "lowlevel_dim", "semantic_dim", "snr", "lowlevel_fraction", "fir_kernel",
                 "rep_noise", "tr_seconds", "roi_groups", "seed"},
             w);
  SynthSpec s;
  s.n_subjects = get(j, "n_subjects", s.n_subjects, w);
  s.n_trs = get(j, "n_trs", s.n_trs, w);
  s.n_voxels = get(j, "n_voxels", s.n_voxels, w);
  s.n_stories = get(j, "n_stories", s.n_stories, w);
  s.n_test_stories = get(j, "n_test_stories", s.n_test_stories, w);
  s.rep_dim = get(j, "rep_dim", s.rep_dim, w);
  s.lowlevel_dim = get(j, "lowlevel_dim", s.lowlevel_dim, w);
  s.semantic_dim = get(j, "semantic_dim", s.semantic_dim, w);
  if (j.contains("snr") && j["snr"].is_string()) {
    if (j["snr"] != "inf") throw ConfigError("synth.snr must be a number or \"inf\"");
    s.snr = std::numeric_limits<double>::infinity();
  } else {
    s.snr = get(j, "snr", s.snr, w);
  }
  s.lowlevel_fraction = get(j, "lowlevel_fraction", s.lowlevel_fraction, w);
  s.fir_kernel = get(j, "fir_kernel", s.fir_kernel, w);
  s.rep_noise = get(j, "rep_noise", s.rep_noise, w);
  s.tr_seconds = get(j, "tr_seconds", s.tr_seconds, w);
  s.roi_groups = get(j, "roi_groups", s.roi_groups, w);
  s.seed = get<std::uint64_t>(j, "seed", SeedTree(rng_seed).derive("synth"), w);
  s.validate();
  return s;
}

StimuliSpec parse_stimuli(const json& j, const fs::path& base) {
  const std::string w = "stimuli";
  check_keys(j, {"tr_seconds", "stories", "inventory", "monophone_presence", "dsp", "precomputed"}, w);
  StimuliSpec s;
  s.tr_seconds = get(j, "tr_seconds", s.tr_seconds, w);
  if (!(s.tr_seconds > 0)) throw ConfigError("stimuli.tr_seconds must be positive");
  s.inventory = resolve(base, get<std::string>(j, "inventory", "", w));
  s.monophone_presence = get(j, "monophone_presence", false, w);
  if (j.contains("stories")) {
    for (std::size_t i = 0; i < j["stories"].size(); ++i) {
      const auto& st = j["stories"][i];
      const std::string ws = "stimuli.stories[" + std::to_string(i) + "]";
      check_keys(st, {"id", "n_trs", "words", "phonemes", "audio"}, ws);
      StorySpec sp;
      sp.id = get<std::string>(st, "id", "story" + std::to_string(i), ws);
      sp.n_trs = get<Index>(st, "n_trs", 0, ws);
      if (sp.n_trs < 1) throw ConfigError(ws + ".n_trs must be >= 1");
      sp.words = resolve(base, get<std::string>(st, "words", "", ws));
      sp.phonemes = resolve(base, get<std::string>(st, "phonemes", "", ws));
      sp.audio = resolve(base, get<std::string>(st, "audio", "", ws));
      s.stories.push_back(std::move(sp));
    }
  }
  if (j.contains("dsp")) {
    const auto& d = j["dsp"];
    check_keys(d, {"window_s", "hop_s", "n_fbank", "n_mel", "n_mfcc", "powspec_bands",
                   "powspec_lo_hz", "powspec_hi_hz", "powspec_segment", "preemphasis"},
               "stimuli.dsp");
    auto& p = s.dsp;
    p.window_s = get(d, "window_s", p.window_s, w);
    p.hop_s = get(d, "hop_s", p.hop_s, w);
    p.n_fbank = get(d, "n_fbank", p.n_fbank, w);
    p.n_mel = get(d, "n_mel", p.n_mel, w);
    p.n_mfcc = get(d, "n_mfcc", p.n_mfcc, w);
    p.powspec_bands = get(d, "powspec_bands", p.powspec_bands, w);
    p.powspec_lo_hz = get(d, "powspec_lo_hz", p.powspec_lo_hz, w);
    p.powspec_hi_hz = get(d, "powspec_hi_hz", p.powspec_hi_hz, w);
    p.powspec_segment = get(d, "powspec_segment", p.powspec_segment, w);
    p.preemphasis = get(d, "preemphasis", p.preemphasis, w);
    p.validate();
  }
  if (j.contains("precomputed")) {
    for (const auto& pc : j["precomputed"]) {
      check_keys(pc, {"name", "path"}, "stimuli.precomputed[]");
      PrecomputedSpec ps{get<std::string>(pc, "name", "", w),
                         resolve(base, get<std::string>(pc, "path", "", w))};
      precomputed_dim(ps.name);  // rejects unknown names
      if (ps.path.empty()) throw ConfigError("stimuli.precomputed '" + ps.name + "' needs a path");
      s.precomputed.push_back(std::move(ps));
    }
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  const std::string w = "config";
  check_keys(doc, {"out_dir", "rng_seed", "lambda_grid", "lambda_score", "n_delays", "block_len",
                   "n_permutations", "ceiling_threshold", "bootstrap", "remove", "removal_mode",
                   "removal_lambda_grid",
                   "representations", "features", "subjects", "atlas", "roi_groups", "ceiling",
                   "normalize", "stats", "probe", "stimuli", "synth", "workers"},
             w);
  ExperimentConfig c;
  c.raw = doc;
  c.base_dir = base_dir;
  c.out_dir = resolve(base_dir, get<std::string>(doc, "out_dir", "out", w));
  c.rng_seed = get<std::uint64_t>(doc, "rng_seed", 0, w);
  if (doc.contains("lambda_grid")) c.lambda_grid = parse_grid(doc["lambda_grid"]);
  c.removal_lambda_grid = doc.contains("removal_lambda_grid") ? parse_grid(doc["removal_lambda_grid"]) : c.lambda_grid;
  const auto score = get<std::string>(doc, "lambda_score", "mse", w);
  if (score == "pearson") {
    c.lambda_score = LambdaScore::pearson;
  } else if (score == "mse") {
    c.lambda_score = LambdaScore::mse;
  } else {
    throw ConfigError("lambda_score must be pearson or mse");
  }
  c.n_delays = get(doc, "n_delays", c.n_delays, w);
  if (c.n_delays < 1) throw ConfigError("n_delays must be >= 1");
  c.block_len = get(doc, "block_len", c.block_len, w);
  if (c.block_len < 1) throw ConfigError("block_len must be >= 1");
  c.n_permutations = get(doc, "n_permutations", c.n_permutations, w);
  if (c.n_permutations < 1) throw ConfigError("n_permutations must be >= 1");
  c.ceiling_threshold = get(doc, "ceiling_threshold", c.ceiling_threshold, w);
  if (!(c.ceiling_threshold >= 0 && c.ceiling_threshold < 1)) {
    throw ConfigError("ceiling_threshold must lie in [0, 1)");
  }
  if (doc.contains("bootstrap")) {
    const auto& b = doc["bootstrap"];
    check_keys(b, {"n_boots", "chunk_len", "holdout_frac"}, "bootstrap");
    c.bootstrap.n_boots = get(b, "n_boots", c.bootstrap.n_boots, "bootstrap");
    c.bootstrap.chunk_len = get(b, "chunk_len", c.bootstrap.chunk_len, "bootstrap");
    c.bootstrap.holdout_frac = get(b, "holdout_frac", c.bootstrap.holdout_frac, "bootstrap");
  }
  if (c.bootstrap.n_boots < 1 || c.bootstrap.chunk_len < 1 ||
      !(c.bootstrap.holdout_frac > 0 && c.bootstrap.holdout_frac < 1)) {
    throw ConfigError("bootstrap needs n_boots >= 1, chunk_len >= 1, 0 < holdout_frac < 1");
  }
  c.remove = get(doc, "remove", std::vector<std::string>{}, w);
  c.removal_mode = removal_mode_from_string(get<std::string>(doc, "removal_mode", "single", w));
  if (doc.contains("representations")) c.representations = parse_inputs(doc["representations"], base_dir, "representations");
  if (doc.contains("features")) c.features = parse_inputs(doc["features"], base_dir, "features");
  if (doc.contains("subjects")) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc["subjects"].size(); ++i) {
      const auto& s = doc["subjects"][i];
      const std::string ws = "subjects[" + std::to_string(i) + "]";
      check_keys(s, {"id", "modality", "path"}, ws);
      SubjectSpec sp;
      sp.id = get<std::string>(s, "id", "", ws);
      if (sp.id.empty()) throw ConfigError(ws + " needs an id");
      try {
        sp.modality = modality_from_string(get<std::string>(s, "modality", "listening", ws));
      } catch (const Error& e) {
        throw ConfigError(ws + ": " + e.what());
      }
      if (!ids.insert(sp.id + "/" + std::string(to_string(sp.modality))).second) {
        throw ConfigError(ws + ": duplicate subject '" + sp.id + "'");
      }
      sp.path = resolve(base_dir, get<std::string>(s, "path", "", ws));
      if (sp.path.empty()) throw ConfigError(ws + " needs a path");
      c.subjects.push_back(std::move(sp));
    }
  }
  if (doc.contains("atlas")) {
    const auto& a = doc["atlas"];
    check_keys(a, {"labels", "groups"}, "atlas");
    c.atlas.emplace(resolve(base_dir, get<std::string>(a, "labels", "", "atlas")),
                    resolve(base_dir, get<std::string>(a, "groups", "", "atlas")));
    if (c.atlas->first.empty() || c.atlas->second.empty()) {
      throw ConfigError("atlas needs both labels and groups");
    }
  }
  c.roi_groups = get(doc, "roi_groups", c.roi_groups, w);
  if (doc.contains("ceiling")) {
    const auto& ce = doc["ceiling"];
    check_keys(ce, {"predictor", "pca_components", "min_subset_size", "max_subset_size"}, "ceiling");
    c.ceiling_predictor = ceiling_predictor_from_string(get<std::string>(ce, "predictor", "all_voxels", "ceiling"));
    c.ceiling_pca = get(ce, "pca_components", c.ceiling_pca, "ceiling");
    c.ceiling_min_subset = get(ce, "min_subset_size", c.ceiling_min_subset, "ceiling");
    c.ceiling_max_subset = get(ce, "max_subset_size", c.ceiling_max_subset, "ceiling");
    if (c.ceiling_pca < 0 || c.ceiling_min_subset < 2 || c.ceiling_max_subset < 0) {
      throw ConfigError("ceiling: pca_components >= 0, min_subset_size >= 2, max_subset_size >= 0");
    }
  }
  if (doc.contains("normalize")) {
    check_keys(doc["normalize"], {"mode"}, "normalize");
    c.normalize_mode = normalize_mode_from_string(get<std::string>(doc["normalize"], "mode", "per_voxel", "normalize"));
  }
  if (doc.contains("stats")) {
    const auto& st = doc["stats"];
    check_keys(st, {"permutation_mode", "alternative", "percent_decrease_eps"}, "stats");
    c.permutation_mode = permutation_mode_from_string(get<std::string>(st, "permutation_mode", "aggregate", "stats"));
    c.contrast_alternative = alternative_from_string(get<std::string>(st, "alternative", "two_sided", "stats"));
    c.percent_decrease_eps = get(st, "percent_decrease_eps", c.percent_decrease_eps, "stats");
    if (!(c.percent_decrease_eps >= 0)) throw ConfigError("stats.percent_decrease_eps must be >= 0");
  }
  c.probe = get(doc, "probe", false, w);
  c.workers = get(doc, "workers", 1, w);
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (doc.contains("stimuli")) c.stimuli = parse_stimuli(doc["stimuli"], base_dir);
  if (doc.contains("synth")) {
    c.synth = parse_synth(doc["synth"], c.rng_seed);
    const auto p = synth_paths(c.synth_dir(), *c.synth);
    if (c.subjects.empty()) {
      for (std::size_t i = 0; i < p.subjects.size(); ++i) {
        c.subjects.push_back({p.subjects[i].stem().string(), Modality::listening, p.subjects[i]});
      }
    }
    if (c.representations.empty()) {
      c.representations.push_back({"representation", p.representation, "", {Modality::listening}});
    }
    if (!c.feature("lowlevel")) c.features.push_back({"lowlevel", p.lowlevel, "", {Modality::listening}});
    if (!c.feature("semantic")) c.features.push_back({"semantic", p.semantic, "", {Modality::listening}});
    if (!c.atlas) c.atlas.emplace(p.atlas_labels, p.atlas_groups);
    if (c.remove.empty()) c.remove = {"lowlevel"};
  }

  for (const auto& r : c.remove) {
    if (!c.feature(r)) throw ConfigError("remove names unknown feature '" + r + "'");
  }
  std::vector<std::string> computable;
  if (c.stimuli) computable = computable_features(*c.stimuli);
  for (const auto* list : {&c.representations, &c.features}) {
    for (const auto& in : *list) {
      if (in.computed.empty()) continue;
      if (std::find(computable.begin(), computable.end(), in.computed) == computable.end()) {
        throw ConfigError("'" + in.name + "' asks for computed feature '" + in.computed +
                          "', which the stimuli block cannot produce");
      }
    }
  }
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' not found");
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + path.string() + "': " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  auto cfg = parse_config(doc, fs::absolute(path).parent_path());
  cfg.config_path = fs::absolute(path);
  return cfg;
}

ValidationReport validate_experiment(const ExperimentConfig& cfg) {
  ValidationReport rep;
  auto& bad = rep.mismatches;
  const bool synth = cfg.synth.has_value();
  auto peek = [&](const fs::path& p, const std::string& what) -> std::optional<io::MatrixHeader> {
    if (!fs::exists(p)) {
      if (!synth) bad.push_back(what + ": missing file '" + p.string() + "'");
      return std::nullopt;
    }
    try {
      return io::peek_matrix(p);
    } catch (const Error& e) {
      bad.push_back(what + ": " + e.what());
      return std::nullopt;
    }
  };

  Index n_voxels = -1;
  for (Modality m : cfg.modalities()) {
    const std::string ms(to_string(m));
    std::optional<io::MatrixHeader> ref;
    std::string ref_id;
    for (const auto* s : cfg.subjects_of(m)) {
      auto h = peek(s->path, "subject '" + s->id + "'");
      if (!h) continue;
      if (!ref) {
        ref = h;
        ref_id = s->id;
        if (n_voxels < 0) n_voxels = h->dim;
        continue;
      }
      if (h->n_rows != ref->n_rows) {
        bad.push_back(ms + ": subject '" + s->id + "' has " + std::to_string(h->n_rows) +
                      " rows, '" + ref_id + "' has " + std::to_string(ref->n_rows));
      }
      if (h->dim != ref->dim) {
        bad.push_back(ms + ": subject '" + s->id + "' has " + std::to_string(h->dim) +
                      " voxels, '" + ref_id + "' has " + std::to_string(ref->dim));
      }
      if (h->story_offsets != ref->story_offsets) {
        bad.push_back(ms + ": story_offsets of subject '" + s->id + "' disagree with '" + ref_id + "'");
      }
    }
    if (!ref) continue;
    if (cfg.stimuli) {
      Index total = 0;
      for (const auto& st : cfg.stimuli->stories) total += st.n_trs;
      if (!cfg.stimuli->stories.empty() && total != ref->n_rows) {
        bad.push_back(ms + ": stimuli stories cover " + std::to_string(total) +
                      " TRs, responses have " + std::to_string(ref->n_rows));
      }
    }
    for (const auto* list : {&cfg.representations, &cfg.features}) {
      for (const auto& in : *list) {
        if (!in.used_for(m) || !in.computed.empty()) continue;
        auto h = peek(in.path, "'" + in.name + "'");
        if (!h) continue;
        if (h->sampling == SamplingKind::per_tr) {
          if (h->n_rows != ref->n_rows) {
            bad.push_back(ms + ": '" + in.name + "' has " + std::to_string(h->n_rows) +
                          " rows, responses have " + std::to_string(ref->n_rows));
          }
          if (h->story_offsets != ref->story_offsets) {
            bad.push_back(ms + ": story_offsets of '" + in.name + "' disagree with the responses");
          }
        } else if (h->story_offsets.size() != ref->story_offsets.size()) {
          bad.push_back(ms + ": '" + in.name + "' has " + std::to_string(h->story_offsets.size()) +
                        " stories, responses have " + std::to_string(ref->story_offsets.size()));
        }
      }
    }
  }

  if (cfg.atlas) {
    if (fs::exists(cfg.atlas->first) && fs::exists(cfg.atlas->second)) {
      try {
        const auto atlas = io::load_atlas(cfg.atlas->first, cfg.atlas->second);
        if (n_voxels >= 0 && atlas.n_voxels() != n_voxels) {
          bad.push_back("atlas labels " + std::to_string(atlas.n_voxels()) +
                        " voxels, responses have " + std::to_string(n_voxels));
        }
        for (const auto& g : cfg.roi_groups) {
          if (!atlas.groups.count(g) && g != kWholeBrainGroup) {
            bad.push_back("roi group '" + g + "' is not in the atlas");
          }
        }
      } catch (const Error& e) {
        bad.push_back(std::string("atlas: ") + e.what());
      }
    } else if (!synth) {
      bad.push_back("atlas: missing labels or groups file");
    }
  }
  if (cfg.subjects.empty()) bad.push_back("no subjects configured");
  if (cfg.representations.empty()) bad.push_back("no representations configured");
  for (Modality m : cfg.modalities()) {
    if (cfg.subjects_of(m).size() < 2) {
      bad.push_back(std::string(to_string(m)) + ": the ceiling needs at least 2 subjects");
    }
  }
  return rep;
}

}  // namespace residalign
