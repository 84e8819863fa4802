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

#include <algorithm>
#include <fstream>

#include "residalign/config.hpp"
#include "residalign/error.hpp"
#include "residalign/pipeline.hpp"

using namespace residalign;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config() {
  return {{"out_dir", "out"},
          {"rng_seed", 3},
          {"lambda_grid", {1.0, 100.0}},
          {"removal_lambda_grid", {0.01}},
          {"bootstrap", {{"n_boots", 2}, {"chunk_len", 10}, {"holdout_frac", 0.2}}},
          {"n_permutations", 20},
          {"probe", true},
          {"synth", {{"n_subjects", 3}, {"n_trs", 160}, {"n_voxels", 12}, {"snr", 4}}}};
}

std::vector<fs::path> find_named(const fs::path& root, const std::string& name) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().filename() == name) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("sha256 of a known string") {
    CHECK(pipeline::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("second run is cached and damage reruns only the subtree") {
    testing::TempDir dir("pipe");
    const auto cfg = parse_config(tiny_config(), dir.path());
    const auto first = pipeline::run(cfg, pipeline::Stage::all);
    CHECK(first.cached.empty());
    CHECK(fs::exists(dir / "out/report/summary.json"));
    CHECK(fs::exists(dir / "out/report/roi_alignment.csv"));

    const auto second = pipeline::run(cfg, pipeline::Stage::all);
    CHECK(second.executed.empty());
    CHECK(second.cached.size() == first.total());

    const auto residuals = find_named(dir / "out/cache/remove", "residual.npy");
    REQUIRE(residuals.size() == 1);
    std::ofstream(residuals[0], std::ios::app) << "x";
    const auto third = pipeline::run(cfg, pipeline::Stage::all);
    REQUIRE_FALSE(third.executed.empty());
    CHECK(third.executed.size() < first.total());
    for (const auto& id : third.executed) {
      const bool downstream = id.rfind("remove/", 0) == 0 || id.rfind("encode/", 0) == 0 ||
                              id.rfind("normalize/", 0) == 0 || id.rfind("stats/", 0) == 0 ||
                              id.rfind("probe/", 0) == 0 || id == "report";
      CHECK_MESSAGE(downstream, id);
    }
    // The unremoved encodings did not depend on the residual.
    CHECK(std::none_of(third.executed.begin(), third.executed.end(), [](const std::string& id) {
      return id.find("/original") != std::string::npos || id.rfind("ceiling", 0) == 0;
    }));
  }

  TEST_CASE("clean runs are byte-identical") {
    testing::TempDir a("pipe-a"), b("pipe-b");
    pipeline::run(parse_config(tiny_config(), a.path()), pipeline::Stage::all);
    pipeline::run(parse_config(tiny_config(), b.path()), pipeline::Stage::all);
    for (const char* f : {"summary.json", "roi_alignment.csv", "permutation.csv"}) {
      CHECK(pipeline::sha256_file(a / "out/report" / f) == pipeline::sha256_file(b / "out/report" / f));
    }
  }

  TEST_CASE("failures name the node") {
    testing::TempDir dir("pipe");
    auto doc = tiny_config();
    doc.erase("synth");
    doc["subjects"] = {{{"id", "sub-01"}, {"path", "missing.npy"}}};
    try {
      pipeline::run(parse_config(doc, dir.path()), pipeline::Stage::encode);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() != ErrorKind::compute);
    }
  }
}
