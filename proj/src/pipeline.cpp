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

#include "residalign/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "residalign/ceiling.hpp"
#include "residalign/encoding.hpp"
#include "residalign/error.hpp"
#include "residalign/io.hpp"
#include "residalign/npy.hpp"
#include "residalign/parallel.hpp"
#include "residalign/residual.hpp"
#include "residalign/rng.hpp"
#include "residalign/stats.hpp"
#include "residalign/stimulus_features.hpp"
#include "residalign/synth.hpp"
#include "residalign/temporal.hpp"

namespace residalign::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

Stage stage_from_string(std::string_view s) {
  static const std::map<std::string_view, Stage> names{
      {"synth", Stage::synth},     {"features", Stage::features},   {"remove", Stage::remove},
      {"encode", Stage::encode},   {"ceiling", Stage::ceiling},     {"normalize", Stage::normalize},
      {"stats", Stage::stats},     {"report", Stage::report},       {"all", Stage::all}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown subcommand '" + std::string(s) + "'");
  return it->second;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::synth: return "synth";
    case Stage::features: return "features";
    case Stage::remove: return "remove";
    case Stage::encode: return "encode";
    case Stage::ceiling: return "ceiling";
    case Stage::normalize: return "normalize";
    case Stage::stats: return "stats";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "?";
}

std::string RunSummary::to_json() const {
  return json{{"executed", executed}, {"cached", cached}}.dump(1) + "\n";
}

// --- hashing ---------------------------------------------------------------

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw ComputeError("sha256: digest init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, out, &len);
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
      s.push_back(digits[out[i] >> 4]);
      s.push_back(digits[out[i] & 15]);
    }
    return s;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "'");
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

namespace {

// --- job graph -------------------------------------------------------------

constexpr const char* kRecordName = "node.json";

struct Node {
  std::string id;
  std::string op;
  json slice;
  std::vector<std::size_t> deps;
  std::vector<std::pair<std::string, fs::path>> inputs;  // role -> file
  fs::path fixed_dir;  // outputs outside the cache (synth data, report)
  std::function<void(const fs::path&)> body;

  std::string key;
  fs::path dir;
  fs::path record;
  bool executed = false;
};

// A matrix file together with its sidecar and onsets, when present.
std::string fingerprint(const fs::path& p) {
  if (!fs::exists(p)) throw ValidationError("missing input '" + p.string() + "'");
  std::string s = sha256_file(p);
  for (const auto& extra : {io::sidecar_path(p), fs::path(p).replace_extension(".onsets.npy")}) {
    if (extra != p && fs::exists(extra)) s += ":" + sha256_file(extra);
  }
  return s;
}

std::map<std::string, std::string> hash_tree(const fs::path& dir, bool skip_record) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (skip_record && rel == kRecordName) continue;
    out[rel] = sha256_file(e.path());
  }
  return out;
}

bool record_valid(const Node& n) {
  if (!fs::exists(n.record)) return false;
  json rec;
  try {
    rec = json::parse(io::read_file(n.record));
  } catch (const std::exception&) {
    return false;
  }
  if (rec.value("key", "") != n.key || !rec.contains("outputs")) return false;
  if (!n.fixed_dir.empty()) {
    // Nothing but the recorded files may sit in a shared output directory.
    const auto now = hash_tree(n.dir, false);
    return json(now) == rec["outputs"];
  }
  for (const auto& [rel, hash] : rec["outputs"].items()) {
    const fs::path f = n.dir / rel;
    if (!fs::exists(f) || sha256_file(f) != hash.get<std::string>()) return false;
  }
  return true;
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

VectorXd read_vec(const fs::path& p) {
  const auto v = npy::read_vector(p);
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

void write_vec(const fs::path& p, const VectorXd& v) {
  npy::write_vector(p, std::vector<double>(v.data(), v.data() + v.size()));
}

void write_json(const fs::path& p, const json& j) { io::write_file_atomic(p, j.dump(1) + "\n"); }

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

std::string slug(std::string s) {
  for (auto& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double sem_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double mu = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

// --- graph construction ----------------------------------------------------

struct Condition {
  std::string label;    // "original" or "removed:<feature>"
  std::string feature;  // empty for the original
  std::optional<std::size_t> remove_node;
};

struct Unit {
  Modality modality;
  const InputSpec* rep;
  std::vector<Condition> conds;
  std::vector<const SubjectSpec*> subjects;
  std::size_t ceiling = 0;
  // [subject][condition]
  std::vector<std::vector<std::size_t>> encode, normalize, stats;
  std::vector<std::pair<std::string, std::size_t>> probes;  // feature -> node
};

class Builder {
 public:
  explicit Builder(const ExperimentConfig& cfg) : cfg_(cfg), seeds_(cfg.rng_seed) {}

  std::vector<Node> nodes;

  void build() {
    if (cfg_.synth) synth_ = add_synth();
    if (cfg_.stimuli) features_ = add_features();
    for (Modality m : cfg_.modalities()) {
      const auto ceiling = add_ceiling(m);
      for (const auto& rep : cfg_.representations) {
        if (rep.used_for(m)) add_unit(m, rep, ceiling);
      }
    }
    if (!units_.empty()) add_report();
  }

 private:
  const ExperimentConfig& cfg_;
  SeedTree seeds_;
  std::optional<std::size_t> synth_, features_;
  std::vector<Unit> units_;
  std::map<int, std::size_t> ceilings_;

  std::size_t add(Node n) {
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
  }

  json ridge_slice() const {
    return {{"lambda_grid", cfg_.lambda_grid},
            {"n_boots", cfg_.bootstrap.n_boots},
            {"chunk_len", cfg_.bootstrap.chunk_len},
            {"holdout_frac", cfg_.bootstrap.holdout_frac},
            {"lambda_score", cfg_.lambda_score == LambdaScore::pearson ? "pearson" : "mse"}};
  }

  std::vector<std::size_t> base_deps() const {
    std::vector<std::size_t> d;
    if (synth_) d.push_back(*synth_);
    return d;
  }

  // Dependencies and hashed files needed to read one input.
  void attach_input(Node& n, const InputSpec& in, const std::string& role) const {
    if (in.computed.empty()) {
      n.inputs.emplace_back(role, in.path);
    } else if (features_) {
      if (std::find(n.deps.begin(), n.deps.end(), *features_) == n.deps.end()) {
        n.deps.push_back(*features_);
      }
    }
  }

  static ResponseMatrix load_subject(const SubjectSpec& s) {
    auto rm = io::load_response_matrix(s.path);
    if (rm.modality != s.modality) {
      throw ValidationError("subject '" + s.id + "' file declares modality " +
                            std::string(to_string(rm.modality)));
    }
    rm.subject_id = s.id;
    return rm;
  }

  static TrGrid grid_of(const ResponseMatrix& rm) {
    TrGrid g;
    g.tr_seconds = rm.tr_seconds;
    for (auto [b, e] : story_ranges(rm.story_offsets, rm.n_trs())) g.story_trs.push_back(e - b);
    return g;
  }

  FeatureMatrix load_input(const InputSpec& in, const TrGrid& grid) const {
    FeatureMatrix fm = in.computed.empty()
                           ? io::load_feature_matrix(in.path)
                           : io::load_feature_matrix(nodes[*features_].dir / (in.computed + ".npy"));
    fm = align_to_tr(fm, grid);
    fm.name = in.name;
    return fm;
  }

  // --- nodes ---------------------------------------------------------------

  std::size_t add_synth() {
    Node n;
    n.id = "synth";
    n.op = "synth";
    n.slice = cfg_.raw.at("synth");
    n.slice["seed"] = cfg_.synth->seed;
    n.fixed_dir = cfg_.synth_dir();
    const SynthSpec spec = *cfg_.synth;
    n.body = [spec](const fs::path& dir) { write_synth(generate(spec), dir); };
    return add(std::move(n));
  }

  std::size_t add_features() {
    Node n;
    n.id = "features";
    n.op = "features";
    n.slice = cfg_.raw.at("stimuli");
    const StimuliSpec st = *cfg_.stimuli;
    for (std::size_t i = 0; i < st.stories.size(); ++i) {
      const auto& s = st.stories[i];
      const auto tag = "story" + std::to_string(i);
      if (!s.words.empty()) n.inputs.emplace_back(tag + ".words", s.words);
      if (!s.phonemes.empty()) n.inputs.emplace_back(tag + ".phonemes", s.phonemes);
      if (!s.audio.empty()) n.inputs.emplace_back(tag + ".audio", s.audio);
    }
    if (!st.inventory.empty()) n.inputs.emplace_back("inventory", st.inventory);
    for (const auto& p : st.precomputed) n.inputs.emplace_back("precomputed." + p.name, p.path);
    n.body = [st](const fs::path& dir) { compute_features(st, dir); };
    return add(std::move(n));
  }

  static void compute_features(const StimuliSpec& st, const fs::path& dir) {
    TrGrid grid;
    grid.tr_seconds = st.tr_seconds;
    for (const auto& s : st.stories) grid.story_trs.push_back(s.n_trs);
    const auto names = computable_features(st);
    auto has = [&](const char* n) { return std::find(names.begin(), names.end(), n) != names.end(); };
    json flags = json::object();
    auto save = [&](FeatureMatrix fm, const std::string& name) {
      fm.name = name;
      io::save_feature_matrix(fm, dir / (name + ".npy"));
    };
    auto per_story = [&](auto member, AnnotationKind kind) {
      std::vector<TimedAnnotation> out;
      for (const auto& s : st.stories) {
        auto a = io::load_annotation(s.*member, kind);
        a.validate();
        out.push_back(std::move(a));
      }
      return out;
    };
    if (has("textual")) {
      const auto t = textual_features(per_story(&StorySpec::words, AnnotationKind::word), grid);
      save(t, "textual");
      const std::vector<std::string> cols{"num_letters", "num_words", "word_length_std"};
      for (auto& c : split_columns(t, cols)) save(c, c.name);
    }
    if (has("num_phonemes")) {
      const auto phones = per_story(&StorySpec::phonemes, AnnotationKind::phoneme);
      PhonemeInventory inv;
      if (st.inventory.empty()) {
        inv = PhonemeInventory::arpabet();
        inv.derive_diphones(phones);
        flags["diphones_derived_from_corpus"] = inv.diphones.size();
      } else {
        inv = PhonemeInventory::load(st.inventory);
      }
      inv.save(dir / "inventory.json");
      auto p = phoneme_features(phones, inv, grid, st.monophone_presence);
      save(p.num_phonemes, "num_phonemes");
      save(p.monophone, "monophones");
      save(p.diphone, "diphones");
      save(p.articulation, "articulation");
      flags["pairs_outside_inventory"] = p.pairs_outside_inventory;
    }
    if (has("fbank")) {
      std::vector<Waveform> audio;
      for (const auto& s : st.stories) audio.push_back(io::load_wav(s.audio));
      auto a = audio_dsp(audio, st.dsp, grid);
      save(a.fbank, "fbank");
      save(a.mel, "mel");
      save(a.mfcc, "mfcc");
      save(a.powspec, "powspec");
      flags["audio"] = a.flags;
    }
    for (const auto& p : st.precomputed) {
      auto fm = ingest_precomputed(p.name, p.path);
      if (p.name == "phonological_frames") {
        auto f = phonological_functionals(fm, grid);
        save(f.values, "phonological");
        flags["phonological_empty_trs"] = f.empty_trs.size();
      } else {
        save(align_to_tr(fm, grid), p.name);
      }
    }
    write_json(dir / "flags.json", flags);
  }

  std::size_t add_ceiling(Modality m) {
    const std::string ms(to_string(m));
    Node n;
    n.id = "ceiling/" + ms;
    n.op = "ceiling";
    n.deps = base_deps();
    n.slice = ridge_slice();
    n.slice["predictor"] = std::string(to_string(cfg_.ceiling_predictor));
    n.slice["pca_components"] = cfg_.ceiling_pca;
    n.slice["min_subset_size"] = cfg_.ceiling_min_subset;
    n.slice["max_subset_size"] = cfg_.ceiling_max_subset;
    const auto subjects = cfg_.subjects_of(m);
    for (const auto* s : subjects) n.inputs.emplace_back("subject." + s->id, s->path);
    CeilingParams cp;
    cp.lambda_grid = cfg_.lambda_grid;
    cp.bootstrap = cfg_.bootstrap;
    cp.score = cfg_.lambda_score;
    cp.predictor = cfg_.ceiling_predictor;
    cp.pca_components = cfg_.ceiling_pca;
    cp.min_subset_size = cfg_.ceiling_min_subset;
    cp.max_subset_size = cfg_.ceiling_max_subset;
    cp.seed = seeds_.derive("ceiling/" + ms);
    n.slice["seed"] = cp.seed;
    n.body = [subjects, cp](const fs::path& dir) {
      std::vector<ResponseMatrix> rs;
      for (const auto* s : subjects) rs.push_back(load_subject(*s));
      const auto maps = cross_subject_ceiling(rs, cp);
      for (const auto& cm : maps) {
        write_vec(dir / (slug(cm.subject_id) + ".npy"), cm.ceiling);
        MatrixXd by_size(cm.ceiling.size(), static_cast<Index>(cm.by_size.size()));
        json sizes = json::array(), counts = json::array(), means = json::array();
        Index col = 0;
        for (const auto& [s, v] : cm.by_size) {
          by_size.col(col++) = v;
          sizes.push_back(s);
          counts.push_back(cm.subsets_per_size.at(s));
          means.push_back(num(v.mean()));
        }
        npy::write(dir / (slug(cm.subject_id) + ".by_size.npy"), by_size);
        write_json(dir / (slug(cm.subject_id) + ".json"),
                   {{"subject", cm.subject_id},
                    {"scheme", cm.scheme},
                    {"subset_sizes", sizes},
                    {"subsets_per_size", counts},
                    {"mean_by_size", means},
                    {"mean_ceiling", num(cm.ceiling.mean())}});
      }
    };
    const auto idx = add(std::move(n));
    ceilings_[static_cast<int>(m)] = idx;
    return idx;
  }

  std::size_t add_remove(Modality m, const InputSpec& rep, const std::vector<const InputSpec*>& feats,
                         const std::string& label) {
    const std::string ms(to_string(m));
    const auto subjects = cfg_.subjects_of(m);
    Node n;
    n.id = "remove/" + ms + "/" + rep.name + "/" + label;
    n.op = "remove";
    n.deps = base_deps();
    n.slice = ridge_slice();
    n.slice["lambda_grid"] = cfg_.removal_lambda_grid;
    attach_input(n, rep, "representation");
    for (const auto* f : feats) attach_input(n, *f, "feature." + f->name);
    n.inputs.emplace_back("split", io::sidecar_path(subjects.front()->path));
    RemovalParams rp;
    rp.lambda_grid = cfg_.removal_lambda_grid;
    rp.bootstrap = cfg_.bootstrap;
    rp.score = cfg_.lambda_score;
    rp.seed = seeds_.derive(n.id);
    n.slice["seed"] = rp.seed;
    const SubjectSpec* first = subjects.front();
    n.body = [this, &rep, feats, label, rp, first](const fs::path& dir) {
      const auto subj = load_subject(*first);
      const auto grid = grid_of(subj);
      const FeatureMatrix W = load_input(rep, grid);
      std::vector<FeatureMatrix> parts;
      for (const auto* f : feats) parts.push_back(load_input(*f, grid));
      FeatureMatrix L = parts.size() == 1 ? parts[0] : concat_features(parts, label);
      L.name = label;
      auto res = remove_feature(L, W, subj.split, rp);
      io::save_feature_matrix(res.residual, dir / "residual.npy");
      io::write_file_atomic(dir / "removal.json", res.record.to_json());
      res.record.model.save(dir / "model");
    };
    return add(std::move(n));
  }

  void add_unit(Modality m, const InputSpec& rep, std::size_t ceiling) {
    const std::string ms(to_string(m));
    Unit u;
    u.modality = m;
    u.rep = &rep;
    u.ceiling = ceiling;
    u.subjects = cfg_.subjects_of(m);
    u.conds.push_back({"original", "", std::nullopt});
    std::vector<const InputSpec*> removable;
    for (const auto& name : cfg_.remove) {
      const auto* f = cfg_.feature(name);
      if (f->used_for(m)) removable.push_back(f);
    }
    if (cfg_.removal_mode != RemovalMode::joint) {
      for (const auto* f : removable) {
        u.conds.push_back({"removed:" + f->name, f->name, add_remove(m, rep, {f}, f->name)});
      }
    }
    if (cfg_.removal_mode != RemovalMode::single && removable.size() > 1) {
      u.conds.push_back({"removed:joint", "joint", add_remove(m, rep, removable, "joint")});
    }
    for (const auto* s : u.subjects) {
      std::vector<std::size_t> enc, norm, st;
      for (const auto& c : u.conds) {
        const auto e = add_encode(m, rep, *s, c);
        enc.push_back(e);
        norm.push_back(add_normalize(m, rep, *s, c, e, ceiling));
        st.push_back(add_stats(m, rep, *s, c, e, ceiling));
      }
      u.encode.push_back(enc);
      u.normalize.push_back(norm);
      u.stats.push_back(st);
    }
    if (cfg_.probe) {
      for (const auto* f : removable) u.probes.emplace_back(f->name, add_probe(m, rep, *f));
    }
    units_.push_back(std::move(u));
  }

  std::string cond_path(Modality m, const InputSpec& rep, const SubjectSpec& s,
                        const Condition& c) const {
    return std::string(to_string(m)) + "/" + s.id + "/" + rep.name + "/" + c.label;
  }

  std::size_t add_encode(Modality m, const InputSpec& rep, const SubjectSpec& s, const Condition& c) {
    Node n;
    n.id = "encode/" + cond_path(m, rep, s, c);
    n.op = "encode";
    n.deps = base_deps();
    n.slice = ridge_slice();
    n.slice["n_delays"] = cfg_.n_delays;
    n.inputs.emplace_back("subject", s.path);
    if (c.remove_node) {
      n.deps.push_back(*c.remove_node);
    } else {
      attach_input(n, rep, "representation");
    }
    EncodingParams ep;
    ep.lambda_grid = cfg_.lambda_grid;
    ep.bootstrap = cfg_.bootstrap;
    ep.score = cfg_.lambda_score;
    ep.delays = DelaySpec::first_n(cfg_.n_delays);
    // Shared by every condition of a subject so contrasts use the same draws.
    ep.seed = seeds_.derive("encode/" + std::string(to_string(m)) + "/" + s.id);
    n.slice["seed"] = ep.seed;
    const auto remove_node = c.remove_node;
    n.body = [this, &rep, &s, remove_node, ep](const fs::path& dir) {
      const auto subj = load_subject(s);
      const FeatureMatrix X =
          remove_node ? io::load_feature_matrix(nodes[*remove_node].dir / "residual.npy")
                      : load_input(rep, grid_of(subj));
      const auto res = fit_encoding(X, subj, ep);
      write_vec(dir / "r.npy", res.r);
      npy::write(dir / "test_pred.npy", res.test_pred);
      npy::write(dir / "test_actual.npy", res.test_actual);
      write_vec(dir / "lambdas.npy", res.model.lambda_per_target);
      std::vector<bool> degenerate = res.degenerate;
      write_json(dir / "encoding.json", {{"subject", res.subject_id},
                                         {"feature", X.name},
                                         {"test_offsets", res.test_offsets},
                                         {"degenerate", degenerate},
                                         {"mean_r", num(res.r.mean())}});
    };
    return add(std::move(n));
  }

  void attach_atlas(Node& n) const {
    if (!cfg_.atlas) return;
    n.inputs.emplace_back("atlas.labels", cfg_.atlas->first);
    n.inputs.emplace_back("atlas.groups", cfg_.atlas->second);
  }

  std::vector<std::string> roi_groups(const RoiAtlas& atlas) const {
    std::vector<std::string> g = cfg_.roi_groups;
    if (g.empty()) {
      for (const auto& [name, labels] : atlas.groups) g.push_back(name);
    }
    if (std::find(g.begin(), g.end(), kWholeBrainGroup) == g.end()) {
      g.emplace_back(kWholeBrainGroup);
    }
    return g;
  }

  std::size_t add_normalize(Modality m, const InputSpec& rep, const SubjectSpec& s,
                            const Condition& c, std::size_t enc, std::size_t ceiling) {
    Node n;
    n.id = "normalize/" + cond_path(m, rep, s, c);
    n.op = "normalize";
    n.deps = {enc, ceiling};
    n.slice = {{"threshold", cfg_.ceiling_threshold},
               {"mode", std::string(to_string(cfg_.normalize_mode))},
               {"roi_groups", cfg_.roi_groups}};
    attach_atlas(n);
    n.body = [this, &s, enc, ceiling](const fs::path& dir) {
      const VectorXd r = read_vec(nodes[enc].dir / "r.npy");
      const VectorXd c = read_vec(nodes[ceiling].dir / (slug(s.id) + ".npy"));
      std::optional<RoiAtlas> atlas;
      std::vector<std::string> groups;
      if (cfg_.atlas) {
        atlas = io::load_atlas(cfg_.atlas->first, cfg_.atlas->second);
        groups = roi_groups(*atlas);
      }
      const auto rep = normalize_alignment(r, c, cfg_.ceiling_threshold,
                                           atlas ? &*atlas : nullptr, groups, cfg_.normalize_mode);
      write_vec(dir / "normalized.npy", rep.normalized);
      VectorXd mask(rep.mask.size());
      for (std::size_t v = 0; v < rep.mask.size(); ++v) mask(static_cast<Index>(v)) = rep.mask[v];
      write_vec(dir / "mask.npy", mask);
      json roi = json::array();
      for (const auto& rv : rep.roi) {
        roi.push_back({{"group", rv.group}, {"mean", num(rv.mean)}, {"count", rv.count},
                       {"empty", rv.empty}});
      }
      write_json(dir / "alignment.json", {{"subject_mean", rep.subject_mean},
                                          {"n_masked", mask.sum()},
                                          {"threshold", rep.threshold},
                                          {"roi", roi}});
    };
    return add(std::move(n));
  }

  std::size_t add_stats(Modality m, const InputSpec& rep, const SubjectSpec& s,
                        const Condition& c, std::size_t enc, std::size_t ceiling) {
    Node n;
    n.id = "stats/" + cond_path(m, rep, s, c);
    n.op = "stats";
    n.deps = {enc, ceiling};
    PermutationParams pp;
    pp.block_len = cfg_.block_len;
    pp.n_permutations = cfg_.n_permutations;
    pp.mode = cfg_.permutation_mode;
    pp.seed = seeds_.derive("permutation/" + std::string(to_string(m)) + "/" + s.id);
    n.slice = {{"block_len", pp.block_len},
               {"n_permutations", pp.n_permutations},
               {"mode", pp.mode == PermutationMode::aggregate ? "aggregate" : "per_voxel"},
               {"threshold", cfg_.ceiling_threshold},
               {"seed", pp.seed}};
    const double threshold = cfg_.ceiling_threshold;
    n.body = [this, &s, enc, ceiling, pp, threshold](const fs::path& dir) {
      const MatrixXd pred = npy::read(nodes[enc].dir / "test_pred.npy");
      const MatrixXd actual = npy::read(nodes[enc].dir / "test_actual.npy");
      const auto info = read_json(nodes[enc].dir / "encoding.json");
      const auto offsets = info.at("test_offsets").get<std::vector<Index>>();
      const VectorXd c = read_vec(nodes[ceiling].dir / (slug(s.id) + ".npy"));
      std::vector<bool> mask(static_cast<std::size_t>(c.size()));
      bool any = false;
      for (Index v = 0; v < c.size(); ++v) {
        mask[v] = c(v) >= threshold && c(v) > 0;
        any = any || mask[v];
      }
      if (!any) throw ComputeError("no voxel has ceiling >= " + std::to_string(threshold));
      const auto res = block_permutation_test(pred, actual, offsets, mask, pp);
      if (pp.mode == PermutationMode::per_voxel) write_vec(dir / "voxel_p.npy", res.voxel_p);
      write_json(dir / "permutation.json", {{"observed", res.observed},
                                            {"p", res.p},
                                            {"n_permutations", pp.n_permutations},
                                            {"block_len", pp.block_len}});
    };
    return add(std::move(n));
  }

  std::size_t add_probe(Modality m, const InputSpec& rep, const InputSpec& f) {
    const auto subjects = cfg_.subjects_of(m);
    Node n;
    n.id = "probe/" + std::string(to_string(m)) + "/" + rep.name + "/" + f.name;
    n.op = "probe";
    n.deps = base_deps();
    n.slice = ridge_slice();
    attach_input(n, rep, "representation");
    attach_input(n, f, "feature");
    n.inputs.emplace_back("split", io::sidecar_path(subjects.front()->path));
    const auto seed = seeds_.derive(n.id);
    n.slice["seed"] = seed;
    const SubjectSpec* first = subjects.front();
    n.body = [this, &rep, &f, first, seed](const fs::path& dir) {
      const auto subj = load_subject(*first);
      const auto grid = grid_of(subj);
      const auto res = probe_r2(load_input(rep, grid), load_input(f, grid), cfg_.lambda_grid,
                                subj.split, cfg_.bootstrap, seed);
      write_vec(dir / "r2.npy", res.r2);
      double sum = 0;
      int defined = 0;
      for (Index c = 0; c < res.r2.size(); ++c) {
        if (!res.undefined[c]) {
          sum += res.r2(c);
          ++defined;
        }
      }
      write_json(dir / "probe.json", {{"mean_r2", num(defined ? sum / defined : std::nan(""))},
                                      {"undefined", res.r2.size() - defined}});
    };
    return add(std::move(n));
  }

  void add_report() {
    Node n;
    n.id = "report";
    n.op = "report";
    n.fixed_dir = cfg_.out_dir / "report";
    n.deps = base_deps();
    for (const auto& u : units_) {
      n.deps.push_back(u.ceiling);
      for (const auto& row : {u.encode, u.normalize, u.stats}) {
        for (const auto& per_subject : row) {
          n.deps.insert(n.deps.end(), per_subject.begin(), per_subject.end());
        }
      }
      for (const auto& [f, p] : u.probes) n.deps.push_back(p);
    }
    for (const auto& f : cfg_.features) attach_input(n, f, "feature." + f.name);
    for (Modality m : cfg_.modalities()) {
      n.inputs.emplace_back("split." + std::string(to_string(m)),
                            io::sidecar_path(cfg_.subjects_of(m).front()->path));
    }
    n.slice = {{"eps", cfg_.percent_decrease_eps},
               {"alternative", static_cast<int>(cfg_.contrast_alternative)}};
    n.body = [this](const fs::path& dir) { write_report(dir); };
    add(std::move(n));
  }

  void write_report(const fs::path& dir) const {
    std::ostringstream roi_csv, subj_csv, perm_csv, probe_csv;
    roi_csv << "modality,representation,condition,group,mean,sem,n_subjects,p\n";
    subj_csv << "modality,representation,condition,subject,normalized_alignment,n_masked\n";
    perm_csv << "modality,representation,condition,subject,observed_r,p\n";
    probe_csv << "modality,representation,feature,mean_r2\n";
    json summary = json::object();

    for (const auto& u : units_) {
      const std::string ms(to_string(u.modality));
      const std::string rn = u.rep->name;
      json& node = summary["modalities"][ms][rn];
      const auto n_subj = u.subjects.size();
      // [condition][subject] -> alignment.json
      std::vector<std::vector<json>> align(u.conds.size());
      for (std::size_t c = 0; c < u.conds.size(); ++c) {
        std::vector<double> means, perm_p;
        for (std::size_t s = 0; s < n_subj; ++s) {
          align[c].push_back(read_json(nodes[u.normalize[s][c]].dir / "alignment.json"));
          const auto perm = read_json(nodes[u.stats[s][c]].dir / "permutation.json");
          const double sm = align[c][s].at("subject_mean").get<double>();
          means.push_back(sm);
          perm_p.push_back(perm.at("p").get<double>());
          subj_csv << ms << ',' << rn << ',' << u.conds[c].label << ',' << u.subjects[s]->id << ','
                   << fmt(sm) << ',' << fmt(align[c][s].at("n_masked").get<double>()) << '\n';
          perm_csv << ms << ',' << rn << ',' << u.conds[c].label << ',' << u.subjects[s]->id << ','
                   << fmt(perm.at("observed").get<double>()) << ',' << fmt(perm_p.back()) << '\n';
        }
        node["conditions"][u.conds[c].label] = {{"subject_mean", means},
                                                {"mean", num(mean_of(means))},
                                                {"sem", num(sem_of(means))},
                                                {"permutation_p", perm_p}};
      }

      // ROI table: original vs zero, removals paired against the original.
      const auto& groups = align[0][0].at("roi");
      auto group_values = [&](std::size_t c, std::size_t g) {
        std::vector<double> v(n_subj, std::nan(""));
        for (std::size_t s = 0; s < n_subj; ++s) {
          const auto& m = align[c][s].at("roi").at(g).at("mean");
          if (!m.is_null()) v[s] = m.get<double>();
        }
        return v;
      };
      for (std::size_t c = 0; c < u.conds.size(); ++c) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
          const auto vals = group_values(c, g);
          const auto base = group_values(0, g);
          std::vector<double> finite, a, b;
          for (std::size_t s = 0; s < n_subj; ++s) {
            if (std::isfinite(vals[s])) finite.push_back(vals[s]);
            if (std::isfinite(vals[s]) && std::isfinite(base[s])) {
              a.push_back(base[s]);
              b.push_back(vals[s]);
            }
          }
          double p = std::nan("");
          if (c == 0 && !finite.empty()) {
            p = wilcoxon_signed_rank(finite, cfg_.contrast_alternative).p;
          } else if (c > 0 && !a.empty()) {
            p = wilcoxon_signed_rank(a, b, cfg_.contrast_alternative).p;
          }
          roi_csv << ms << ',' << rn << ',' << u.conds[c].label << ','
                  << groups[g].at("group").get<std::string>() << ',' << fmt(mean_of(finite)) << ','
                  << fmt(sem_of(finite)) << ',' << finite.size() << ',' << fmt(p) << '\n';
        }
      }

      // Percent decrease maps and the share of alignment explained by each
      // removed feature: 1 - sum(max(after, 0)^2) / sum(before^2) over
      // normalized values on the ceiling mask.
      for (std::size_t c = 1; c < u.conds.size(); ++c) {
        double num_all = 0, den_all = 0;
        std::vector<double> per_subject;
        const auto pd_dir = dir / "percent_decrease" / ms / slug(rn) / slug(u.conds[c].feature);
        fs::create_directories(pd_dir);
        for (std::size_t s = 0; s < n_subj; ++s) {
          const VectorXd r0 = read_vec(nodes[u.encode[s][0]].dir / "r.npy");
          const VectorXd r1 = read_vec(nodes[u.encode[s][c]].dir / "r.npy");
          write_vec(pd_dir / (slug(u.subjects[s]->id) + ".npy"),
                    percent_decrease(r0, r1, cfg_.percent_decrease_eps).value);
          const VectorXd b = read_vec(nodes[u.normalize[s][0]].dir / "normalized.npy");
          const VectorXd a = read_vec(nodes[u.normalize[s][c]].dir / "normalized.npy");
          const VectorXd mask = read_vec(nodes[u.normalize[s][0]].dir / "mask.npy");
          double nu = 0, de = 0;
          for (Index v = 0; v < mask.size(); ++v) {
            if (mask(v) == 0 || !std::isfinite(a(v)) || !std::isfinite(b(v))) continue;
            nu += std::pow(std::max(a(v), 0.0), 2);
            de += b(v) * b(v);
          }
          per_subject.push_back(de > 0 ? 1.0 - nu / de : std::nan(""));
          num_all += nu;
          den_all += de;
        }
        node["explained_share"][u.conds[c].feature] = {
            {"pooled", num(den_all > 0 ? 1.0 - num_all / den_all : std::nan(""))},
            {"per_subject", per_subject}};
      }

      for (const auto& [f, p] : u.probes) {
        const auto pj = read_json(nodes[p].dir / "probe.json");
        probe_csv << ms << ',' << rn << ',' << f << ','
                  << (pj["mean_r2"].is_null() ? "nan" : fmt(pj["mean_r2"].get<double>())) << '\n';
        node["probe_mean_r2"][f] = pj["mean_r2"];
      }
    }

    // Feature-feature correlations on the TR grid of each modality; multi
    // column features enter through their first principal component.
    for (Modality m : cfg_.modalities()) {
      const auto subj = load_subject(*cfg_.subjects_of(m).front());
      const auto grid = grid_of(subj);
      std::vector<FeatureMatrix> feats;
      for (const auto& f : cfg_.features) {
        if (f.used_for(m)) feats.push_back(first_principal_component(load_input(f, grid)));
      }
      if (feats.size() < 2) continue;
      const auto cm = feature_correlation(feats);
      std::ostringstream csv;
      csv << "feature";
      for (const auto& nme : cm.names) csv << ',' << nme;
      csv << '\n';
      for (Index i = 0; i < cm.r.rows(); ++i) {
        csv << cm.names[i];
        for (Index j = 0; j < cm.r.cols(); ++j) csv << ',' << fmt(cm.r(i, j));
        csv << '\n';
      }
      io::write_file_atomic(dir / ("feature_correlation_" + std::string(to_string(m)) + ".csv"),
                            csv.str());
    }

    if (cfg_.synth && fs::exists(synth_paths(cfg_.synth_dir(), *cfg_.synth).truth)) {
      summary["truth"] = read_json(synth_paths(cfg_.synth_dir(), *cfg_.synth).truth);
    }
    io::write_file_atomic(dir / "roi_alignment.csv", roi_csv.str());
    io::write_file_atomic(dir / "subject_alignment.csv", subj_csv.str());
    io::write_file_atomic(dir / "permutation.csv", perm_csv.str());
    if (cfg_.probe) io::write_file_atomic(dir / "probe_r2.csv", probe_csv.str());
    write_json(dir / "summary.json", summary);
  }
};

bool wanted(const Node& n, Stage stage) {
  if (stage == Stage::all) return true;
  return n.op == to_string(stage);
}

}  // namespace

RunSummary run(const ExperimentConfig& cfg, Stage stage, const RunOptions& opts) {
  if (stage != Stage::synth && stage != Stage::features) {
    const auto report = validate_experiment(cfg);
    if (!report.ok()) {
      std::string msg = "experiment validation failed:";
      for (const auto& m : report.mismatches) msg += "\n  " + m;
      throw ValidationError(msg);
    }
  }
  if (stage == Stage::synth && !cfg.synth) throw ConfigError("config has no synth block");
  if (stage == Stage::features && !cfg.stimuli) throw ConfigError("config has no stimuli block");

  Builder b(cfg);
  b.build();
  auto& nodes = b.nodes;

  std::vector<bool> needed(nodes.size(), false);
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (wanted(nodes[i], stage)) needed[i] = true;
    if (needed[i]) {
      for (auto d : nodes[i].deps) needed[d] = true;
    }
  }
  std::vector<int> level(nodes.size(), 0);
  int max_level = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto d : nodes[i].deps) level[i] = std::max(level[i], level[d] + 1);
    max_level = std::max(max_level, level[i]);
  }

  const fs::path cache = cfg.out_dir / "cache";
  const int workers = opts.workers > 0 ? opts.workers : cfg.workers;
  for (int l = 0; l <= max_level; ++l) {
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (needed[i] && level[i] == l) batch.push_back(i);
    }
    parallel_for(batch.size(), workers, [&](std::size_t k) {
      Node& n = nodes[batch[k]];
      try {
        json key_doc{{"op", n.op}, {"id", n.id}, {"slice", n.slice}};
        for (auto d : n.deps) key_doc["deps"].push_back(nodes[d].key);
        for (const auto& [role, path] : n.inputs) key_doc["inputs"][role] = fingerprint(path);
        n.key = sha256_hex(key_doc.dump());
        const fs::path entry = cache / n.op / n.key;
        n.dir = n.fixed_dir.empty() ? entry : n.fixed_dir;
        n.record = entry / kRecordName;
        const bool dep_ran = std::any_of(n.deps.begin(), n.deps.end(),
                                         [&](std::size_t d) { return nodes[d].executed; });
        if (!dep_ran && record_valid(n)) return;
        fs::remove_all(n.dir);
        fs::remove_all(entry);
        fs::create_directories(n.dir);
        fs::create_directories(entry);
        n.body(n.dir);
        json rec{{"op", n.op}, {"id", n.id}, {"key", n.key},
                 {"outputs", hash_tree(n.dir, n.fixed_dir.empty())}};
        write_json(n.record, rec);
        n.executed = true;
      } catch (const Error& e) {
        throw Error(e.kind(), "node '" + n.id + "': " + e.what());
      } catch (const std::exception& e) {
        throw ComputeError("node '" + n.id + "': " + e.what());
      }
    });
  }

  RunSummary summary;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!needed[i]) continue;
    (nodes[i].executed ? summary.executed : summary.cached).push_back(nodes[i].id);
    if (opts.log) *opts.log << (nodes[i].executed ? "ran    " : "cached ") << nodes[i].id << '\n';
  }
  return summary;
}

}  // namespace residalign::pipeline
