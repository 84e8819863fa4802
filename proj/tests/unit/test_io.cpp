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

#include "helpers.hpp"

#include <json.hpp>

#include <fstream>

#include "residalign/config.hpp"
#include "residalign/error.hpp"
#include "residalign/io.hpp"
#include "residalign/npy.hpp"

using namespace residalign;
using testing::randn;
using testing::TempDir;

namespace {

ResponseMatrix response(Index n, Index v, std::vector<Index> offsets, std::uint64_t seed) {
  ResponseMatrix rm;
  rm.subject_id = "sub-01";
  rm.values = randn(n, v, seed);
  rm.story_offsets = offsets;
  std::vector<Split> per_story(offsets.size(), Split::train);
  per_story.back() = Split::test;
  rm.split = expand_story_split(per_story, offsets, n);
  return rm;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

}  // namespace

TEST_SUITE("npy and sidecars") {
  TEST_CASE("4x3 per-TR matrix loads with its shape") {
    TempDir d("io");
    auto fm = testing::per_tr("layer", randn(4, 3, 1));
    io::save_feature_matrix(fm, d / "layer.npy");
    const auto back = io::load_feature_matrix(d / "layer.npy");
    CHECK(back.n_rows() == 4);
    CHECK(back.dim() == 3);
    CHECK(back.values == fm.values);  // bit-exact
    CHECK(back.name == "layer");
    CHECK(back.sampling.kind == SamplingKind::per_tr);
  }

  TEST_CASE("NaN is rejected with its position") {
    TempDir d("io");
    MatrixXd m = randn(4, 3, 2);
    m(2, 1) = std::nan("");
    auto fm = testing::per_tr("bad", m);
    npy::write(d / "bad.npy", m);
    io::write_file_atomic(io::sidecar_path(d / "bad.npy"),
                          R"({"name": "bad", "sampling": "per_TR", "tr_seconds": 2.0045, "story_offsets": [0]})");
    try {
      io::load_feature_matrix(d / "bad.npy");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("row 2, col 1") != std::string::npos);
    }
  }

  TEST_CASE("irregular sampling round-trips its onsets") {
    TempDir d("io");
    FeatureMatrix fm;
    fm.name = "words";
    fm.sampling = Sampling::irregular({0.1, 0.5, 0.9, 0.2, 0.7});
    fm.values = randn(5, 2, 3);
    fm.story_offsets = {0, 3};
    io::save_feature_matrix(fm, d / "w.npy");
    const auto back = io::load_feature_matrix(d / "w.npy");
    CHECK(back.sampling.kind == SamplingKind::irregular);
    CHECK(back.sampling.onsets == fm.sampling.onsets);
    CHECK(back.story_offsets == fm.story_offsets);
    CHECK(io::peek_matrix(d / "w.npy").sampling == SamplingKind::irregular);
  }

  TEST_CASE("broken invariants are validation errors") {
    auto fm = testing::per_tr("x", randn(6, 2, 4), {0, 6});
    CHECK_THROWS_AS(fm.validate(), ValidationError);
    fm.story_offsets = {1};
    CHECK_THROWS_AS(fm.validate(), ValidationError);
    fm.story_offsets = {0, 3, 3};
    CHECK_THROWS_AS(fm.validate(), ValidationError);
    FeatureMatrix irr;
    irr.sampling = Sampling::irregular({0.0, 1.0, 0.5});
    irr.values = randn(3, 1, 1);
    CHECK_THROWS_AS(irr.validate(), ValidationError);
  }

  TEST_CASE("responses round-trip with split and subject") {
    TempDir d("io");
    auto rm = response(30, 4, {0, 10, 20}, 5);
    rm.modality = Modality::reading;
    io::save_response_matrix(rm, d / "sub.npy");
    const auto back = io::load_response_matrix(d / "sub.npy");
    CHECK(back.values == rm.values);
    CHECK(back.split == rm.split);
    CHECK(back.modality == Modality::reading);
    CHECK(back.subject_id == "sub-01");
    // a split that cuts through a story is invalid
    rm.split[5] = Split::test;
    CHECK_THROWS_AS(rm.validate(), ValidationError);
  }

  TEST_CASE("corrupt containers are format errors") {
    TempDir d("io");
    write_text(d / "junk.npy", "definitely not numpy");
    CHECK_THROWS_AS(npy::read(d / "junk.npy"), FormatError);
    const auto bytes = npy::encode(randn(3, 3, 1));
    CHECK_THROWS_AS(npy::decode(bytes.substr(0, bytes.size() - 8)), FormatError);
    CHECK(npy::decode(bytes) == randn(3, 3, 1));
  }

  TEST_CASE("annotations, atlases and audio") {
    TempDir d("io");
    write_text(d / "story.tsv", "token\tonset\tduration\nThe\t0.0\t0.2\ncat\t0.25\t0.3\n");
    const auto a = io::load_annotation(d / "story.tsv", AnnotationKind::word);
    CHECK(a.tokens.size() == 2);
    CHECK(a.tokens[1].text == "cat");
    CHECK(a.tokens[1].onset == doctest::Approx(0.25));
    CHECK(a.story_id == "story");

    RoiAtlas atlas;
    atlas.voxel_labels = {"V1", "V2", "AG", "V1"};
    atlas.groups = {{"EVC", {"V1", "V2"}}, {"AG", {"AG"}}};
    io::save_atlas(atlas, d / "labels.csv", d / "groups.json");
    const auto back = io::load_atlas(d / "labels.csv", d / "groups.json");
    CHECK(back.voxel_labels == atlas.voxel_labels);
    CHECK(back.members("EVC") == std::vector<Index>{0, 1, 3});
    CHECK(back.members("whole_brain").size() == 4);
    CHECK_THROWS_AS(back.members("nope"), ConfigError);

    Waveform w;
    w.rate = 16000;
    for (int i = 0; i < 1600; ++i) w.samples.push_back(0.5 * std::sin(0.01 * i));
    io::save_wav_float32(w, d / "f.wav");
    io::save_wav_pcm16(w, d / "i.wav");
    const auto f = io::load_wav(d / "f.wav");
    const auto i16 = io::load_wav(d / "i.wav");
    CHECK(f.rate == 16000);
    CHECK(f.samples.size() == 1600);
    CHECK(f.samples[700] == doctest::Approx(w.samples[700]).epsilon(1e-7));
    CHECK(std::abs(i16.samples[700] - w.samples[700]) < 1.0 / 32767);
  }
}

TEST_SUITE("config") {
  TEST_CASE("unknown keys and bad values are config errors") {
    using nlohmann::json;
    CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}, "."), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"lambda_grid", {10, 1}}}, "."), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"lambda_score", "r2"}}, "."), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"remove", {"missing"}}}, "."), ConfigError);
    const auto c = parse_config(json{{"lambda_grid", {{"min", 10}, {"max", 1000}, {"n", 3}}}}, ".");
    CHECK(c.lambda_grid.size() == 3);
    CHECK(c.lambda_grid[1] == doctest::Approx(100));
    CHECK(c.removal_lambda_grid == c.lambda_grid);
  }

  TEST_CASE("overrides parse as JSON and fall back to strings") {
    nlohmann::json doc{{"synth", {{"snr", 4}}}};
    apply_override(doc, "synth.snr=2.5");
    apply_override(doc, "out_dir=results");
    apply_override(doc, "bootstrap.n_boots=7");
    CHECK(doc["synth"]["snr"] == 2.5);
    CHECK(doc["out_dir"] == "results");
    CHECK(doc["bootstrap"]["n_boots"] == 7);
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
  }

  TEST_CASE("validation reports shape and story mismatches") {
    TempDir d("cfg");
    io::save_response_matrix(response(40, 5, {0, 20}, 1), d / "s1.npy");
    auto s2 = response(40, 5, {0, 20}, 2);
    s2.subject_id = "sub-02";
    io::save_response_matrix(s2, d / "s2.npy");
    io::save_feature_matrix(testing::per_tr("rep", randn(40, 3, 3), {0, 20}), d / "rep.npy");
    io::save_feature_matrix(testing::per_tr("short", randn(39, 1, 3), {0, 20}), d / "short.npy");
    io::save_feature_matrix(testing::per_tr("shifted", randn(40, 1, 3), {0, 21}), d / "shifted.npy");
    nlohmann::json doc{
        {"subjects", {{{"id", "sub-01"}, {"path", "s1.npy"}}, {{"id", "sub-02"}, {"path", "s2.npy"}}}},
        {"representations", {{{"name", "rep"}, {"path", "rep.npy"}}}},
        {"features", nlohmann::json::array()}};
    CHECK(validate_experiment(parse_config(doc, d.path())).ok());

    doc["features"] = {{{"name", "short"}, {"path", "short.npy"}}};
    auto rep = validate_experiment(parse_config(doc, d.path()));
    REQUIRE(rep.mismatches.size() == 1);
    CHECK(rep.mismatches[0].find("39") != std::string::npos);

    doc["features"] = {{{"name", "shifted"}, {"path", "shifted.npy"}}};
    rep = validate_experiment(parse_config(doc, d.path()));
    REQUIRE(rep.mismatches.size() == 1);
    CHECK(rep.mismatches[0].find("story_offsets") != std::string::npos);
  }
}
