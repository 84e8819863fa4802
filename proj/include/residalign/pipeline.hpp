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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "residalign/config.hpp"

namespace residalign::pipeline {

enum class Stage { synth, features, remove, encode, ceiling, normalize, stats, report, all };
Stage stage_from_string(std::string_view s);
std::string_view to_string(Stage s);

struct RunOptions {
  int workers = 0;            // 0: use the config value
  std::ostream* log = nullptr;  // one line per node when set
};

struct RunSummary {
  std::vector<std::string> executed;  // node ids, in graph order
  std::vector<std::string> cached;
  std::size_t total() const { return executed.size() + cached.size(); }
  std::string to_json() const;
};

/// Build the job graph for `stage` (plus everything it depends on) and run
/// the stale nodes. A node is stale when its cache record is missing, one of
/// its recorded outputs no longer matches its hash, or a dependency ran in
/// this invocation. Failures rethrow with the node id prefixed; finished
/// nodes keep their cache entries.
RunSummary run(const ExperimentConfig& cfg, Stage stage, const RunOptions& opts = {});

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace residalign::pipeline
