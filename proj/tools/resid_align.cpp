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

// resid-align: command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "residalign.h"

namespace {

int report(ra_status st) {
  if (st != RA_OK) std::fprintf(stderr, "resid-align: %s\n", ra_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual alignment between model representations and brain responses"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", ra_version());

  std::string config;
  int workers = 0;
  std::string seed;
  std::vector<std::string> overrides;
  bool quiet = false;
  app.add_option("-c,--config", config, "experiment config (JSON)")->required();
  app.add_option("-j,--workers", workers, "parallel node workers (default: config value)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "override rng_seed");
  app.add_option("--override", overrides, "config override key.path=value (repeatable)");
  app.add_flag("-q,--quiet", quiet, "do not list nodes");

  const std::vector<std::pair<const char*, const char*>> stages{
      {"synth", "generate the planted-structure dataset"},
      {"features", "compute stimulus features"},
      {"remove", "residualize representations on low-level features"},
      {"encode", "fit voxelwise encoding models"},
      {"ceiling", "estimate cross-subject noise ceilings"},
      {"normalize", "normalize alignment by the ceiling"},
      {"stats", "block permutation tests"},
      {"report", "aggregate tables and summary"},
      {"all", "run every stage"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);
  auto* validate = app.add_subcommand("validate", "check config and file shapes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : RA_ERR_CONFIG;
  }

  if (!seed.empty()) overrides.push_back("rng_seed=" + seed);
  std::vector<const char*> ov;
  for (const auto& o : overrides) ov.push_back(o.c_str());

  if (validate->parsed()) {
    const int rc = report(ra_config_validate(config.c_str(), ov.data(), ov.size()));
    if (rc == 0) std::printf("ok\n");
    return rc;
  }
  const std::string stage = app.get_subcommands().front()->get_name();
  char* summary = nullptr;
  const ra_status st = ra_pipeline_run(config.c_str(), stage.c_str(), ov.data(), ov.size(),
                                       workers, quiet ? 0 : 1, &summary);
  if (st == RA_OK && summary != nullptr) std::fputs(summary, stdout);
  ra_string_free(summary);
  return report(st);
}
